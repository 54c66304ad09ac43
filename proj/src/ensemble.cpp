#include "thermeval/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "thermeval/error.hpp"
#include "thermeval/evaluate.hpp"

namespace thermeval {

void EnsembleConfig::validate() const {
  if (members.empty()) throw ValidationError("ensemble needs at least one member");
  for (const auto& m : members) {
    if (!m) throw ValidationError("ensemble member is null");
  }
  if (!weights.empty() && weights.size() != members.size()) {
    throw ValidationError("ensemble weights must match the member count");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ValidationError("ensemble weights must be positive");
    }
  }
  if (member_tta) member_tta->validate();
}

std::vector<Detection> ensemble_detect(const EnsembleConfig& config,
                                       const ImageContext& image) {
  config.validate();
  std::vector<Detection> pooled;
  for (std::size_t i = 0; i < config.members.size(); ++i) {
    const Detector& member = *config.members[i];
    std::vector<Detection> dets;
    try {
      if (config.member_tta) {
        dets = tta_detect(member, image, *config.member_tta);
      } else {
        dets = detect(member, image, ViewKey{image.image_id, std::string(kIdentityView)},
                      AffineTransform::identity(), image.canvas);
      }
    } catch (const Error& e) {
      rethrow_with_context(e, "ensemble member '" + member.name() + "'");
    } catch (const std::exception& e) {
      throw ValidationError("ensemble member '" + member.name() + "' failed: " + e.what());
    }
    const double w = config.weight(i);
    for (auto& d : dets) {
      if (w != 1.0) d.score = std::min(1.0, d.score * w);
      pooled.push_back(d);
    }
  }
  if (config.members.size() == 1) return pooled;
  return fuse(pooled, config.merge);
}

SubsetSelection select_best_subset(std::span<const DetectorPtr> candidates,
                                   const Dataset& validation, const EvalConfig& eval_config,
                                   std::size_t max_size, const MergeStrategy& merge,
                                   std::size_t threads) {
  if (candidates.empty()) throw ValidationError("subset selection needs candidates");
  if (candidates.size() > kMaxSubsetCandidates) {
    throw ValidationError("subset selection is limited to " +
                          std::to_string(kMaxSubsetCandidates) + " candidates");
  }
  if (max_size < 1 || max_size > candidates.size()) {
    throw ValidationError("max subset size must lie in [1, candidate count]");
  }

  SubsetSelection selection;
  const std::size_t n = candidates.size();
  for (std::uint32_t mask = 1; mask < (1U << n); ++mask) {
    SubsetScore score;
    EnsembleConfig cfg;
    cfg.merge = merge;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1U << i)) {
        score.members.push_back(i);
        cfg.members.push_back(candidates[i]);
      }
    }
    if (score.members.size() > max_size) continue;
    const MetricsReport report = evaluate(validation, Ttme{cfg}, eval_config, threads);
    if (!report.map) {
      throw ValidationError("validation set has no ground-truth boxes");
    }
    score.map = *report.map;
    score.precision = report.precision;
    score.recall = report.recall;
    selection.ranked.push_back(std::move(score));
  }
  std::sort(selection.ranked.begin(), selection.ranked.end(),
            [](const SubsetScore& l, const SubsetScore& r) {
              if (l.map != r.map) return l.map > r.map;
              if (l.members.size() != r.members.size()) {
                return l.members.size() < r.members.size();
              }
              return l.members < r.members;
            });
  selection.best = selection.ranked.front();
  return selection;
}

std::string format_selection(const SubsetSelection& selection,
                             std::span<const DetectorPtr> candidates, bool as_json) {
  auto names = [&](const SubsetScore& s) {
    std::vector<std::string> out;
    for (std::size_t i : s.members) out.push_back(candidates[i]->name());
    return out;
  };
  if (as_json) {
    nlohmann::ordered_json doc;
    doc["best"] = names(selection.best);
    doc["ranked"] = nlohmann::ordered_json::array();
    for (const auto& s : selection.ranked) {
      doc["ranked"].push_back({{"members", names(s)},
                               {"map", s.map * 100.0},
                               {"precision", s.precision},
                               {"recall", s.recall}});
    }
    return doc.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "rank  mAP%     P%       R%       members\n";
  std::size_t rank = 1;
  for (const auto& s : selection.ranked) {
    char line[96];
    std::snprintf(line, sizeof(line), "%-5zu %-8.2f %-8.2f %-8.2f ", rank++, s.map * 100.0,
                  s.precision, s.recall);
    out << line;
    const auto n = names(s);
    for (std::size_t i = 0; i < n.size(); ++i) out << (i ? " + " : "") << n[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace thermeval
