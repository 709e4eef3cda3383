#include "mpt/evaluation.hpp"

#include <Eigen/Core>
#include <charconv>

namespace mpt::evaluation {

EvalReport evaluate(const std::vector<core::Label>& predictions,
                    const std::vector<core::Label>& gold, const core::LabelSpace& space,
                    bool include_empty_classes) {
    if (predictions.size() != gold.size()) {
        throw LengthMismatch(std::to_string(predictions.size()) + " predictions for " +
                             std::to_string(gold.size()) + " gold labels");
    }
    if (predictions.empty()) throw LengthMismatch("evaluate over empty inputs");

    const int n_labels = space.size();
    Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(n_labels, n_labels);  // (gold, pred)
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const int g = gold[i].index;
        const int p = predictions[i].index;
        if (g < 0 || g >= n_labels || p < 0 || p >= n_labels) {
            throw UnknownLabel("label index outside the space at position " + std::to_string(i));
        }
        confusion(g, p) += 1;
    }

    EvalReport report;
    report.n = static_cast<std::int64_t>(gold.size());
    report.accuracy =
        static_cast<double>(confusion.diagonal().sum()) / static_cast<double>(report.n);

    double f1_sum = 0.0;
    int f1_classes = 0;
    for (int y = 0; y < n_labels; ++y) {
        ClassMetrics m;
        const std::int64_t tp = confusion(y, y);
        const std::int64_t predicted = confusion.col(y).sum();
        m.support = confusion.row(y).sum();
        m.precision = predicted == 0 ? 0.0
                                     : static_cast<double>(tp) / static_cast<double>(predicted);
        m.recall = m.support == 0 ? 0.0
                                  : static_cast<double>(tp) / static_cast<double>(m.support);
        m.f1 = (m.precision + m.recall) == 0.0
                   ? 0.0
                   : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        const bool empty = m.support == 0 && predicted == 0;
        if (!empty || include_empty_classes) {
            f1_sum += m.f1;
            ++f1_classes;
        }
        report.per_class.push_back(m);
    }
    report.macro_f1 = f1_classes == 0 ? 0.0 : f1_sum / static_cast<double>(f1_classes);
    return report;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

std::string metrics_csv_header(const core::LabelSpace& space) {
    std::string out = "run,split,seed,n,accuracy,macro_f1";
    for (const core::Label& l : space.labels()) {
        out += "," + l.name + "_precision," + l.name + "_recall," + l.name + "_f1," + l.name +
               "_support";
    }
    return out;
}

std::string metrics_csv_row(const std::string& run, const std::string& split,
                            std::uint64_t seed, const EvalReport& report) {
    std::string out = run + "," + split + "," + std::to_string(seed) + "," +
                      std::to_string(report.n) + "," + fmt(report.accuracy) + "," +
                      fmt(report.macro_f1);
    for (const ClassMetrics& m : report.per_class) {
        out += "," + fmt(m.precision) + "," + fmt(m.recall) + "," + fmt(m.f1) + "," +
               std::to_string(m.support);
    }
    return out;
}

}  // namespace mpt::evaluation
