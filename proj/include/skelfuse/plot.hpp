#pragma once

#include <string>
#include <vector>

#include "skelfuse/jsonio.hpp"

namespace skelfuse {

/// Renders loss_curves.png and accuracy_curves.png from metrics rows.
void plot_metrics(const std::vector<EpochRow>& rows, const std::string& out_dir);

/// Renders attention_heatmap.png (frames x candidate slots) for one video of a
/// localization export; empty video_id picks the first video in the file.
void plot_attention_heatmap(const std::vector<LocalizeRecord>& records, const std::string& out_dir,
                            const std::string& video_id = "");

}  // namespace skelfuse
