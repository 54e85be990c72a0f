#include "jmlsr/timeseries.hpp"

#include "jmlsr/error.hpp"

namespace jmlsr {

void TimeSeries::validate() const {
  if (!y.allFinite()) fail(ErrorCode::InvalidArgument, "time series contains non-finite outputs");
  if (theta_form()) {
    if (u.size() != 0) fail(ErrorCode::InvalidArgument, "time series cannot carry both u and theta");
    if (static_cast<Index>(theta.size()) != horizon()) fail(ErrorCode::InvalidArgument, "theta length must equal T");
    for (int q : theta)
      if (q < 0) fail(ErrorCode::InvalidArgument, "theta values must be valid states");
  } else {
    if (u.rows() != horizon() || u.cols() != static_cast<Index>(input_alphabet.size()))
      fail(ErrorCode::InvalidArgument, "input matrix must be T x d");
    if (!u.allFinite()) fail(ErrorCode::InvalidArgument, "time series contains non-finite inputs");
  }
}

Matrix pair_inputs(const std::vector<int>& theta, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  const Index t_len = static_cast<Index>(theta.size());
  Matrix u = Matrix::Zero(t_len, static_cast<Index>(pairs.size()));
  for (Index t = 0; t + 1 < t_len; ++t)
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (static_cast<std::size_t>(theta[static_cast<std::size_t>(t)]) == pairs[k].first &&
          static_cast<std::size_t>(theta[static_cast<std::size_t>(t + 1)]) == pairs[k].second)
        u(t, static_cast<Index>(k)) = 1.0;
  return u;
}

}  // namespace jmlsr
