#ifndef EWER_BINNING_HPP_
#define EWER_BINNING_HPP_

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ewer {

// WER class structure: k ordered classes, each with a representative WER
// value (percent) and a half-open assignment range. The first range starts
// at 0 and the last extends to +infinity so every non-negative WER maps to
// some class.
struct ClassMap {
  enum class Kind { balanced, fixed };

  Kind kind = Kind::balanced;
  std::vector<double> wer_fixed;                    // percent, non-decreasing
  std::vector<std::pair<double, double>> ranges;    // [lo, hi)

  int k() const { return static_cast<int>(wer_fixed.size()); }
};

// Equal-count quantile classes: sorts ascending, splits by index into k
// contiguous groups whose sizes differ by at most one (the first
// |wers| mod k groups take the extra sample), and represents each group by
// its arithmetic mean. Range boundaries sit at the midpoints between
// adjacent groups' extreme values.
ClassMap build_balanced(std::span<const double> wers, int k);

// Fixed representative values (strictly increasing); assignment casts to
// the nearest value, ties toward the lower class. The conventional default
// is fixed_default_values().
ClassMap build_fixed(std::span<const double> values);

const std::vector<double>& fixed_default_values();  // {0,25,50,75,100,150}

// Training labels follow the sorted-index partition of build_balanced, so
// equal WER values at a group boundary can land in different classes. Ties
// among equal WERs are ordered by id. Input order is (id, wer); output
// labels are in input order.
std::vector<int> assign_training(
    std::span<const std::pair<std::string, double>> samples, int k);

// Evaluation-time assignment: the unique class whose range contains the
// value, boundary values to the lower-indexed class.
int assign(const ClassMap& map, double wer);

// JSON round trip: {"kind", "k", "wer_fixed", "ranges"}; finite numbers are
// written with 17 significant digits, +infinity as null.
std::string classmap_to_json(const ClassMap& map);
ClassMap classmap_from_json(const std::string& text);

}  // namespace ewer

#endif  // EWER_BINNING_HPP_
