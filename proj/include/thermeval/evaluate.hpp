#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "thermeval/detector.hpp"
#include "thermeval/ensemble.hpp"
#include "thermeval/formats.hpp"
#include "thermeval/metrics.hpp"
#include "thermeval/tta.hpp"

namespace thermeval {

/// Plain single-view inference.
struct Ttna {
  DetectorPtr detector;
};

/// Test-time augmentation over `config.views`.
struct Tta {
  DetectorPtr detector;
  TtaConfig config;
};

/// Model ensembling.
struct Ttme {
  EnsembleConfig config;
};

using Protocol = std::variant<Ttna, Tta, Ttme>;

std::string protocol_name(const Protocol& protocol);

/// Detections for one image in the source frame.
std::vector<Detection> run_protocol(const Protocol& protocol, const ImageContext& image);

/// Runs the protocol on every image and scores the result. Images may run
/// on `threads` workers; scoring always reduces in image-id order, so the
/// report (timing aside) does not depend on the thread count.
MetricsReport evaluate(const Dataset& dataset, const Protocol& protocol,
                       const EvalConfig& config, std::size_t threads = 1);

/// Scoring step of evaluate(): `detections[i]` belongs to
/// dataset.manifest.images[i].
MetricsReport score_detections(const Dataset& dataset,
                               std::span<const std::vector<Detection>> detections,
                               const EvalConfig& config, std::string protocol = "given");

}  // namespace thermeval
