#ifndef LINCOLN_METRICS_HPP
#define LINCOLN_METRICS_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "lincoln/errors.hpp"

namespace lincoln {

// Rank-statistic AUROC with average ranks for ties:
//   (R_pos - n_pos(n_pos+1)/2) / (n_pos * n_neg),
// the probability a random positive outranks a random negative, ties half.
inline double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) raise(ErrorCode::ShapeMismatch, "auroc");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += y ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) raise(ErrorCode::SingleClass, "auroc needs both classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // 1-based average
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]]) rank_sum_pos += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Average precision: sort by score descending (stable, so ties keep input
// order), AP = mean over positives of precision at their rank.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) raise(ErrorCode::ShapeMismatch, "average_precision");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += y ? 1 : 0;
    if (n_pos == 0) raise(ErrorCode::NoPositives, "average_precision needs a positive");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double sum = 0.0;
    std::size_t seen_pos = 0;
    for (std::size_t rank = 1; rank <= n; ++rank) {
        if (labels[order[rank - 1]]) {
            ++seen_pos;
            sum += static_cast<double>(seen_pos) / static_cast<double>(rank);
        }
    }
    return sum / static_cast<double>(n_pos);
}

} // namespace lincoln

#endif // LINCOLN_METRICS_HPP
