#pragma once

#include "micmix/baselines.hpp"
#include "micmix/cgmm.hpp"
#include "micmix/csv.hpp"
#include "micmix/data.hpp"
#include "micmix/ecoff.hpp"
#include "micmix/error.hpp"
#include "micmix/eval.hpp"
#include "micmix/gwas.hpp"
#include "micmix/io.hpp"
#include "micmix/log.hpp"
#include "micmix/polya_gamma.hpp"
#include "micmix/postprocess.hpp"
#include "micmix/stats.hpp"
#include "micmix/svg.hpp"
