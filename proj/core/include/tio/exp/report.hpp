#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tio/exp/experiments.hpp"
#include "tio/train/evaluate.hpp"

namespace tio::exp {

// Every CSV starts with a config_hash column so rows can be traced to the run that produced them.

/// ablation.csv and summary.txt (mean per variant across seeds).
void write_ablation_report(const std::filesystem::path& dir, const AblationReport& r);
/// validation.csv (per-window RPE of both branches), summary.txt and RPE histograms.
void write_validation_report(const std::filesystem::path& dir, const ValidationReport& r);
/// fps.csv, summary.txt and fps_curve.svg.
void write_fps_report(const std::filesystem::path& dir, const FpsCurve& c);
/// huber.csv and summary.txt.
void write_huber_report(const std::filesystem::path& dir, const HuberReport& r);

/// Appends "PASS|FAIL name: detail" lines to a text file.
void append_checks(const std::filesystem::path& path, const std::vector<Check>& checks);

struct EvalRow {
  std::string mode;
  train::SequenceMetrics metrics;
};

/// metrics.csv with one row per (mode, sequence).
void write_eval_table(const std::filesystem::path& path, const std::string& config_hash,
                      const std::vector<EvalRow>& rows);

}  // namespace tio::exp
