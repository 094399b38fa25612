#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace imbalance {

/// Binary OpenML-CC18 tasks used by the benchmark, with their published
/// sample counts and natural minority prior. Files are fetched out-of-band.
struct CatalogEntry {
  std::string_view name;
  std::size_t n;
  double pi1;
  int openml_dataset_id;
};

inline constexpr std::array<CatalogEntry, 11> kBenchmarkCatalog{{
    {"kr-vs-kp", 3196, 0.478, 3},
    {"spambase", 4601, 0.394, 44},
    {"electricity", 45312, 0.424, 151},
    {"jm1", 10885, 0.194, 1053},
    {"adult", 48842, 0.239, 1590},
    {"Bioresponse", 3751, 0.458, 4134},
    {"phoneme", 5404, 0.293, 1489},
    {"nomao", 34465, 0.286, 1486},
    {"PhishingWebsites", 11055, 0.443, 4534},
    {"bank-marketing", 45211, 0.117, 1461},
    {"numerai28.6", 96320, 0.495, 23517},
}};

inline std::optional<CatalogEntry> find_catalog_entry(std::string_view name) {
  for (const auto& e : kBenchmarkCatalog)
    if (e.name == name) return e;
  return std::nullopt;
}

}  // namespace imbalance
