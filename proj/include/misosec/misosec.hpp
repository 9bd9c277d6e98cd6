#pragma once

#include "misosec/hermitian.hpp"
#include "misosec/special_fn.hpp"
#include "misosec/rate_eval.hpp"
#include "misosec/grad_kkt.hpp"
#include "misosec/full_csi.hpp"
#include "misosec/analysis.hpp"
#include "misosec/config.hpp"
