#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "trisym/expr.hpp"
#include "trisym/types.hpp"

namespace trisym {

struct GridAxis {
  real lo = 0;
  real hi = 1;
  int count = 1;
  enum class Spacing { Linear, Log } spacing = Spacing::Linear;

  std::vector<real> values() const {
    if (count < 1) throw std::invalid_argument("axis count must be positive");
    if (!std::isfinite(lo) || !std::isfinite(hi))
      throw std::invalid_argument("axis bounds must be finite");
    if (count > 1 && !(lo < hi))
      throw std::invalid_argument("axis needs lo < hi for more than one point");
    if (spacing == Spacing::Log && !(lo > 0))
      throw std::invalid_argument("log axis needs lo > 0");
    std::vector<real> v(static_cast<std::size_t>(count));
    if (count == 1) {
      v[0] = lo;
      return v;
    }
    if (spacing == Spacing::Linear) {
      const real h = (hi - lo) / (count - 1);
      for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = lo + h * i;
    } else {
      const real llo = std::log(lo), lhi = std::log(hi);
      const real h = (lhi - llo) / (count - 1);
      for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = std::exp(llo + h * i);
    }
    v.back() = hi;
    return v;
  }
};

// Cartesian sample set: a t axis, one axis per space coordinate and one per
// frequency coordinate.
struct SampleGrid {
  GridAxis t;
  std::vector<GridAxis> x;
  std::vector<GridAxis> xi;

  std::size_t size() const {
    std::size_t n = t.values().size();
    for (const auto& ax : x) n *= ax.values().size();
    for (const auto& ax : xi) n *= ax.values().size();
    return n;
  }

  void for_each(const std::function<void(const EvalPoint&)>& fn) const {
    const auto tv = t.values();
    std::vector<std::vector<real>> xv, xiv;
    for (const auto& ax : x) xv.push_back(ax.values());
    for (const auto& ax : xi) xiv.push_back(ax.values());

    vec xp(static_cast<Eigen::Index>(xv.size()));
    vec xip(static_cast<Eigen::Index>(xiv.size()));
    std::vector<std::size_t> ix(xv.size(), 0), ixi(xiv.size(), 0);

    const auto advance = [](std::vector<std::size_t>& idx,
                            const std::vector<std::vector<real>>& vals) {
      for (std::size_t d = 0; d < idx.size(); ++d) {
        if (++idx[d] < vals[d].size()) return true;
        idx[d] = 0;
      }
      return false;
    };

    for (real tval : tv) {
      std::fill(ix.begin(), ix.end(), 0);
      do {
        for (std::size_t d = 0; d < xv.size(); ++d)
          xp[static_cast<Eigen::Index>(d)] = xv[d][ix[d]];
        std::fill(ixi.begin(), ixi.end(), 0);
        do {
          for (std::size_t d = 0; d < xiv.size(); ++d)
            xip[static_cast<Eigen::Index>(d)] = xiv[d][ixi[d]];
          fn(EvalPoint::make(tval, xp, xip));
        } while (advance(ixi, xiv));
      } while (advance(ix, xv));
    }
  }
};

}  // namespace trisym
