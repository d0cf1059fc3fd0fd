#pragma once

#include "dpdtest/chisq_mixture.hpp"
#include "dpdtest/dpd.hpp"
#include "dpdtest/dpd_test.hpp"
#include "dpdtest/errors.hpp"
#include "dpdtest/estimators.hpp"
#include "dpdtest/inh_model.hpp"
#include "dpdtest/io.hpp"
#include "dpdtest/normal_lrm.hpp"
#include "dpdtest/optimize.hpp"
#include "dpdtest/restriction.hpp"
#include "dpdtest/robustness.hpp"
#include "dpdtest/simulation.hpp"
#include "dpdtest/types.hpp"
