#pragma once

#include <string>
#include <string_view>

#include "qipf/csv.hpp"
#include "qipf/eval.hpp"
#include "qipf/modes.hpp"
#include "qipf/uq.hpp"

namespace qipf::io {

/// Columns: point coordinates (x, or x1..xd), then V1..VK, then the IPF value.
CsvTable modes_to_csv(const ModeMatrix& modes);

/// E_k, flags and the wave function alongside the matrix shape.
std::string modes_to_json(const ModeMatrix& modes);

/// One JSON object per test point, newline separated.
std::string report_to_jsonl(const uq::UncertaintyReport& report);
uq::UncertaintyReport report_from_jsonl(std::string_view text, const std::string& source = "report");

/// Run metadata. Wall-clock timings are left out unless asked for, so
/// repeated runs produce identical files.
std::string report_metadata_json(const uq::ReportMetadata& meta, bool include_timings = false);

/// fpr,tpr rows.
CsvTable roc_to_csv(const eval::RocCurve& curve);

}  // namespace qipf::io
