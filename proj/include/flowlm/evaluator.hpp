#ifndef FLOWLM_EVALUATOR_HPP
#define FLOWLM_EVALUATOR_HPP

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "flowlm/scorer.hpp"

namespace flowlm {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    bool operator==(const RocPoint&) const = default;
};

/// Points run from (0,0) to (1,1) with both coordinates non-decreasing.
/// Equal scores form one threshold step; collinear interior points are dropped.
struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
    std::size_t positives = 0;  // ATTACK count
    std::size_t negatives = 0;  // NORMAL count
};

/// Higher score = more anomalous. Throws DataError when either class is absent.
RocCurve roc(const std::vector<double>& scores, const std::vector<Label>& labels);
RocCurve roc(const std::vector<ScoredDyadHour>& scored);

/// `fpr,tpr` rows followed by `# auc=<value>`.
void export_roc(const RocCurve& curve, std::ostream& out);
void export_roc(const RocCurve& curve, const std::string& path);
RocCurve read_roc_csv(std::istream& in);

}  // namespace flowlm

#endif
