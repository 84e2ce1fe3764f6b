#pragma once

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "proden/datagen.hpp"

namespace proden {

struct EpochRecord {
  int epoch = 0;                   // 1-based
  double risk = 0.0;               // weighted empirical risk after the epoch
  double test_accuracy = 0.0;
  double transductive_accuracy = 0.0;
  double seconds = 0.0;            // wall clock, 0 unless timing is enabled

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct MetricsLog {
  std::vector<EpochRecord> records;

  friend bool operator==(const MetricsLog&, const MetricsLog&) = default;
};

inline constexpr const char* kMetricsCsvHeader = "epoch,risk,test_acc,transductive_acc,seconds";

inline void write_metrics_csv(std::ostream& out, const MetricsLog& log) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& r : log.records) {
    out << r.epoch << ',' << detail::format_double(r.risk) << ',' << detail::format_double(r.test_accuracy) << ','
        << detail::format_double(r.transductive_accuracy) << ',' << detail::format_double(r.seconds) << '\n';
  }
}

inline void save_metrics_csv(const std::string& path, const MetricsLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'", Error::Category::Data);
  write_metrics_csv(out, log);
}

}  // namespace proden
