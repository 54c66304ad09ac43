#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "thermeval/detector.hpp"

namespace thermeval {

/// Global seed of a mock detector: SplitMix64 applied once to
/// run_seed ^ (spec_seed * 0x9E3779B97F4A7C15). With both zero the mock
/// still gets a well-mixed seed.
std::uint64_t mix_seed(std::uint64_t run_seed, std::uint64_t spec_seed) noexcept;

/// Builds a mock from "key=value,..." with keys p_miss, jitter, fp_rate,
/// score_lo, score_hi, fp_lo, fp_hi, fp_classes, seed, name, cost_ms.
/// `cost_ms > 0` wraps the mock in a ConstantCostDetector.
DetectorPtr parse_mock_spec(std::string_view spec, std::uint64_t run_seed,
                            int default_fp_classes = 7);

/// Runs one command line. `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 usage or validation failure, 2 I/O
/// failure.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace thermeval
