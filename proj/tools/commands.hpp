#pragma once

#include "run_config.hpp"

namespace vibench::cli {

void cmd_synth(const RunConfig& cfg);
void cmd_window(const RunConfig& cfg);
void cmd_featurize(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_score(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg, bool dry_run);
void cmd_compare(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);

} // namespace vibench::cli
