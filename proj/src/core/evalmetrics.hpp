#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/annotations.hpp"
#include "core/geometry.hpp"

namespace synthdet {

struct Detection {
  int image_id = 0;
  int category_id = 0;
  BBox2D bbox;
  double score = 0.0;
};

struct GroundTruthBox {
  int image_id = 0;
  int category_id = 0;
  BBox2D bbox;
};

struct MetricsReport {
  double map = 0.0;     // mean AP over IoU thresholds 0.50:0.05:0.95
  double map_50 = 0.0;  // AP at IoU 0.50
  double map_75 = 0.0;  // AP at IoU 0.75
  double ar_100 = 0.0;  // mean recall at <= 100 detections per image
  struct PerCategory {
    int category_id = 0;
    double ap = 0.0;     // averaged over thresholds
    double ap_50 = 0.0;
    double ap_75 = 0.0;
    double recall = 0.0; // averaged over thresholds, top-100
  };
  std::vector<PerCategory> per_category;  // ordered by category id

  nlohmann::ordered_json to_json() const;
  // Aligned plain-text table with one row per metric.
  std::string to_text() const;
};

// Intersection-over-union with continuous box coordinates (area of a box
// is width*height, no +1). Returns 0 when the union is empty.
double iou(const BBox2D& a, const BBox2D& b);

// The IoU thresholds 0.50, 0.55, ..., 0.95.
const std::vector<double>& iou_thresholds();

// Average precision for a single category at one IoU threshold.
// Detections are matched greedily in descending score order (ties broken
// by image_id, then bbox lexicographic) to the unmatched ground truth of
// the same image with highest IoU >= threshold. AP is the mean of
// interpolated precision at the 101 recall points 0.00, 0.01, ..., 1.00.
double average_precision(const std::vector<Detection>& detections,
                         const std::vector<GroundTruthBox>& ground_truths,
                         double iou_threshold);

// Recall of the greedy matching at one threshold, keeping only the
// max_dets highest-scoring detections per image for this category.
double recall_at(const std::vector<Detection>& detections,
                 const std::vector<GroundTruthBox>& ground_truths,
                 double iou_threshold, int max_dets);

// Full report over all categories present in the ground truth. Categories
// without ground-truth boxes are excluded from the means; a detection with
// a category id absent from `categories` is an UnknownCategory error.
MetricsReport evaluate(const std::vector<Detection>& detections,
                       const std::vector<GroundTruthBox>& ground_truths,
                       const std::vector<CategoryInfo>& categories,
                       int max_dets = 100);

// Detections file: JSON array of {image_id, category_id,
// bbox [x_min, y_min, width, height], score}.
std::vector<Detection> read_detections(const std::string& path);
void write_detections(const std::vector<Detection>& detections,
                      const std::string& path);

// Ground truth from a datagen annotations file.
std::vector<GroundTruthBox> ground_truth_from_annotations(
    const DatasetAnnotations& data);

}  // namespace synthdet
