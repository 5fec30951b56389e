#ifndef ZSATTN_ZSATTN_HPP
#define ZSATTN_ZSATTN_HPP

#include "core.hpp"
#include "dataset.hpp"
#include "experiment.hpp"
#include "loss.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "splitter.hpp"
#include "trainer.hpp"

#endif  // ZSATTN_ZSATTN_HPP
