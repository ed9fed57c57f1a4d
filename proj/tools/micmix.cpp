#include "micmix/cli.hpp"

int main(int argc, char **argv)
{
  return micmix::cli::main(argc, argv);
}
