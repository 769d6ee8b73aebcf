#include "core/evalmetrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "core/error.hpp"

namespace synthdet {

double iou(const BBox2D& a, const BBox2D& b) {
  double ix = std::max(0.0, std::min(a.x_max, b.x_max) -
                                std::max(a.x_min, b.x_min));
  double iy = std::max(0.0, std::min(a.y_max, b.y_max) -
                                std::max(a.y_min, b.y_min));
  double inter = ix * iy;
  double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

const std::vector<double>& iou_thresholds() {
  static const std::vector<double> thresholds = [] {
    std::vector<double> t;
    for (int i = 0; i <= 9; ++i) t.push_back(0.50 + 0.05 * i);
    return t;
  }();
  return thresholds;
}

namespace {

bool detection_order(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image_id != b.image_id) return a.image_id < b.image_id;
  auto key = [](const Detection& d) {
    return std::array<double, 4>{d.bbox.x_min, d.bbox.y_min, d.bbox.x_max,
                                 d.bbox.y_max};
  };
  return key(a) < key(b);
}

// Greedy matching in score order; tp[i] says whether sorted detection i
// matched a ground truth.
std::vector<bool> greedy_match(const std::vector<Detection>& sorted_dets,
                               const std::vector<GroundTruthBox>& gts,
                               double threshold) {
  std::vector<bool> gt_used(gts.size(), false);
  std::vector<bool> tp(sorted_dets.size(), false);
  for (size_t i = 0; i < sorted_dets.size(); ++i) {
    const Detection& det = sorted_dets[i];
    double best = threshold;
    int best_gt = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g] || gts[g].image_id != det.image_id) continue;
      double v = iou(det.bbox, gts[g].bbox);
      if (v >= best && (best_gt < 0 || v > best)) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_used[best_gt] = true;
      tp[i] = true;
    }
  }
  return tp;
}

double ap_from_matches(const std::vector<bool>& tp, size_t gt_count) {
  if (gt_count == 0) return 0.0;
  // Precision/recall after each detection, in score order.
  std::vector<double> precisions, recalls;
  long tp_count = 0;
  for (size_t i = 0; i < tp.size(); ++i) {
    if (tp[i]) ++tp_count;
    precisions.push_back(static_cast<double>(tp_count) /
                         static_cast<double>(i + 1));
    recalls.push_back(static_cast<double>(tp_count) /
                      static_cast<double>(gt_count));
  }
  // Interpolated precision at recall r is the max precision at any
  // recall >= r; summed over the 101-point grid.
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    double r = k / 100.0;
    double best = 0.0;
    for (size_t i = 0; i < tp.size(); ++i)
      if (recalls[i] >= r) best = std::max(best, precisions[i]);
    sum += best;
  }
  return sum / 101.0;
}

std::vector<Detection> top_per_image(const std::vector<Detection>& sorted_dets,
                                     int max_dets) {
  std::map<int, int> per_image;
  std::vector<Detection> out;
  for (const auto& d : sorted_dets) {
    if (per_image[d.image_id] >= max_dets) continue;
    ++per_image[d.image_id];
    out.push_back(d);
  }
  return out;
}

}  // namespace

double average_precision(const std::vector<Detection>& detections,
                         const std::vector<GroundTruthBox>& ground_truths,
                         double iou_threshold) {
  if (ground_truths.empty()) return 0.0;
  std::vector<Detection> sorted = detections;
  std::stable_sort(sorted.begin(), sorted.end(), detection_order);
  std::vector<bool> tp = greedy_match(sorted, ground_truths, iou_threshold);
  return ap_from_matches(tp, ground_truths.size());
}

double recall_at(const std::vector<Detection>& detections,
                 const std::vector<GroundTruthBox>& ground_truths,
                 double iou_threshold, int max_dets) {
  if (ground_truths.empty()) return 0.0;
  std::vector<Detection> sorted = detections;
  std::stable_sort(sorted.begin(), sorted.end(), detection_order);
  sorted = top_per_image(sorted, max_dets);
  std::vector<bool> tp = greedy_match(sorted, ground_truths, iou_threshold);
  long matched = std::count(tp.begin(), tp.end(), true);
  return static_cast<double>(matched) /
         static_cast<double>(ground_truths.size());
}

MetricsReport evaluate(const std::vector<Detection>& detections,
                       const std::vector<GroundTruthBox>& ground_truths,
                       const std::vector<CategoryInfo>& categories,
                       int max_dets) {
  std::set<int> known;
  for (const auto& c : categories) known.insert(c.id);
  for (const auto& d : detections)
    if (!known.count(d.category_id))
      throw Error(ErrorCode::kUnknownCategory,
                  "detection references category " +
                      std::to_string(d.category_id) +
                      " absent from ground truth");

  MetricsReport report;
  double sum_ap = 0, sum_ap50 = 0, sum_ap75 = 0, sum_recall = 0;
  int evaluated = 0;
  for (const auto& cat : categories) {
    std::vector<Detection> dets;
    for (const auto& d : detections)
      if (d.category_id == cat.id) dets.push_back(d);
    std::vector<GroundTruthBox> gts;
    for (const auto& g : ground_truths)
      if (g.category_id == cat.id) gts.push_back(g);
    if (gts.empty()) continue;  // category excluded from the means

    MetricsReport::PerCategory pc;
    pc.category_id = cat.id;
    double ap_sum = 0, recall_sum = 0;
    const auto& thresholds = iou_thresholds();
    for (size_t ti = 0; ti < thresholds.size(); ++ti) {
      double ap = average_precision(dets, gts, thresholds[ti]);
      ap_sum += ap;
      recall_sum += recall_at(dets, gts, thresholds[ti], max_dets);
      if (ti == 0) pc.ap_50 = ap;   // threshold 0.50
      if (ti == 5) pc.ap_75 = ap;   // threshold 0.75
    }
    pc.ap = ap_sum / iou_thresholds().size();
    pc.recall = recall_sum / iou_thresholds().size();
    report.per_category.push_back(pc);
    sum_ap += pc.ap;
    sum_ap50 += pc.ap_50;
    sum_ap75 += pc.ap_75;
    sum_recall += pc.recall;
    ++evaluated;
  }
  if (evaluated > 0) {
    report.map = sum_ap / evaluated;
    report.map_50 = sum_ap50 / evaluated;
    report.map_75 = sum_ap75 / evaluated;
    report.ar_100 = sum_recall / evaluated;
  }
  std::sort(report.per_category.begin(), report.per_category.end(),
            [](const auto& a, const auto& b) {
              return a.category_id < b.category_id;
            });
  return report;
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["map"] = map;
  j["map_50"] = map_50;
  j["map_75"] = map_75;
  j["ar_100"] = ar_100;
  auto cats = nlohmann::ordered_json::array();
  for (const auto& pc : per_category)
    cats.push_back({{"category_id", pc.category_id},
                    {"ap", pc.ap},
                    {"ap_50", pc.ap_50},
                    {"ap_75", pc.ap_75},
                    {"recall_100", pc.recall}});
  j["per_category"] = cats;
  return j;
}

std::string MetricsReport::to_text() const {
  char buf[128];
  std::string out;
  auto row = [&](const char* label, double v) {
    std::snprintf(buf, sizeof(buf), "%-16s %.3f\n", label, v);
    out += buf;
  };
  row("Prec [mAP]", map);
  row("Prec [mAP@0.5]", map_50);
  row("Prec [mAP@0.75]", map_75);
  row("Acc [@100]", ar_100);
  if (!per_category.empty()) {
    out += "\nper category:\n";
    for (const auto& pc : per_category) {
      std::snprintf(buf, sizeof(buf),
                    "  id %-4d mAP %.3f  mAP@0.5 %.3f  mAP@0.75 %.3f  "
                    "AR@100 %.3f\n",
                    pc.category_id, pc.ap, pc.ap_50, pc.ap_75, pc.recall);
      out += buf;
    }
  }
  return out;
}

std::vector<Detection> read_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "no such file: " + path);
  nlohmann::ordered_json root;
  try {
    root = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  if (!root.is_array())
    throw Error(ErrorCode::kParseError,
                path + ": expected a top-level array of detections");
  std::vector<Detection> out;
  try {
    for (const auto& j : root) {
      Detection d;
      d.image_id = j.at("image_id").get<int>();
      d.category_id = j.at("category_id").get<int>();
      const auto& bb = j.at("bbox");
      double x = bb.at(0).get<double>(), y = bb.at(1).get<double>();
      double w = bb.at(2).get<double>(), h = bb.at(3).get<double>();
      d.bbox = {x, y, x + w, y + h};
      d.score = j.at("score").get<double>();
      if (d.score < 0 || d.score > 1)
        throw Error(ErrorCode::kInvalidParam,
                    path + ": detection score out of [0,1]");
      out.push_back(d);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  return out;
}

void write_detections(const std::vector<Detection>& detections,
                      const std::string& path) {
  nlohmann::ordered_json root = nlohmann::ordered_json::array();
  for (const auto& d : detections)
    root.push_back({{"image_id", d.image_id},
                    {"category_id", d.category_id},
                    {"bbox", {d.bbox.x_min, d.bbox.y_min, d.bbox.width(),
                              d.bbox.height()}},
                    {"score", d.score}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open for write: " + path);
  out << root.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

std::vector<GroundTruthBox> ground_truth_from_annotations(
    const DatasetAnnotations& data) {
  std::vector<GroundTruthBox> out;
  for (const auto& r : data.annotations) {
    GroundTruthBox g;
    g.image_id = r.image_id;
    g.category_id = r.category_id;
    g.bbox = {r.bbox[0], r.bbox[1], r.bbox[0] + r.bbox[2],
              r.bbox[1] + r.bbox[3]};
    out.push_back(g);
  }
  return out;
}

}  // namespace synthdet
