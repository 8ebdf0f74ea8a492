#ifndef FBP_KAHAN_HPP
#define FBP_KAHAN_HPP

#include <cmath>

namespace fbp {

// Neumaier-compensated accumulator. The compensation term also captures
// the case |term| > |sum|, unlike plain Kahan.
class KahanSum {
  public:
    void add(double x) {
        double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace fbp

#endif
