#pragma once

#include "abfgsm/attack.hpp"
#include "abfgsm/config.hpp"
#include "abfgsm/dataset.hpp"
#include "abfgsm/eval.hpp"
#include "abfgsm/model.hpp"
#include "abfgsm/optim.hpp"
#include "abfgsm/rng.hpp"
#include "abfgsm/tensor.hpp"
