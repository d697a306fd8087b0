#pragma once

#include "milrisk/config.hpp"

namespace milrisk {

// Each command validates the config, writes its outputs (overwriting) and
// reports progress on stderr. Failures throw milrisk::Error.

void cmd_synth(const RunConfig& cfg);
void cmd_preprocess(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_score(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg);
void cmd_sweep(const RunConfig& cfg);

}  // namespace milrisk
