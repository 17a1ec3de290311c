#pragma once

#include "skadapt/units.hpp"
#include "skadapt/model.hpp"
#include "skadapt/io.hpp"
#include "skadapt/lpbound.hpp"
#include "skadapt/sumdist.hpp"
#include "skadapt/policy.hpp"
#include "skadapt/evalexact.hpp"
#include "skadapt/policies.hpp"
#include "skadapt/policy_io.hpp"
#include "skadapt/families.hpp"
#include "skadapt/gaps.hpp"
#include "skadapt/montecarlo.hpp"
#include "skadapt/bruteforce.hpp"
#include "skadapt/reproduce.hpp"
