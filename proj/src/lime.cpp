#include "mlfx/lime.hpp"

#include <algorithm>
#include <cmath>

#include "mlfx/common.hpp"
#include "mlfx/rng.hpp"

namespace mlfx {

namespace {

// Gaussian elimination with partial pivoting; A is n x n row-major.
std::vector<double> solve_linear(std::vector<double> A, std::vector<double> b) {
  const std::size_t n = b.size();
  double scale = 0.0;
  for (double v : A) scale = std::max(scale, std::abs(v));
  const double tiny = std::max(scale, 1.0) * 1e-12;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(A[r * n + col]) > std::abs(A[pivot * n + col])) pivot = r;
    }
    if (std::abs(A[pivot * n + col]) < tiny) {
      throw NumericError("lime: singular design matrix");
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(A[col * n + c], A[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A[r * n + col] / A[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= A[i * n + c] * x[c];
    x[i] = acc / A[i * n + i];
  }
  return x;
}

}  // namespace

LimeExplanation lime_fit(const std::vector<std::vector<double>>& masks,
                         const std::vector<double>& responses, double kernel_width, double ridge) {
  if (masks.empty() || masks.size() != responses.size()) {
    throw ValidationError("lime_fit: masks and responses must match and be nonempty");
  }
  const std::size_t m = masks.front().size();
  if (masks.size() < m + 1) {
    throw ValidationError("lime_fit: need at least m+1 samples");
  }
  if (!(kernel_width > 0.0) || ridge < 0.0) {
    throw ValidationError("lime_fit: kernel width must be > 0 and ridge >= 0");
  }
  const bool all_equal = std::all_of(masks.begin(), masks.end(),
                                     [&](const auto& row) { return row == masks.front(); });
  if (all_equal) {
    throw NumericError("lime: singular design matrix (all masks equal)");
  }

  // Normal equations for weighted ridge with unpenalized intercept:
  // (X^T W X + ridge * R) beta = X^T W y, X = [1 | masks].
  const std::size_t dim = m + 1;
  std::vector<double> A(dim * dim, 0.0);
  std::vector<double> rhs(dim, 0.0);
  for (std::size_t s = 0; s < masks.size(); ++s) {
    if (masks[s].size() != m) throw ValidationError("lime_fit: ragged mask rows");
    double kept = 0.0;
    for (double v : masks[s]) kept += v;
    const double frac = kept / static_cast<double>(m);
    const double w = std::exp(-(1.0 - frac) * (1.0 - frac) / (kernel_width * kernel_width));

    std::vector<double> row(dim);
    row[0] = 1.0;
    for (std::size_t j = 0; j < m; ++j) row[j + 1] = masks[s][j];
    for (std::size_t i = 0; i < dim; ++i) {
      rhs[i] += w * row[i] * responses[s];
      for (std::size_t j = 0; j < dim; ++j) A[i * dim + j] += w * row[i] * row[j];
    }
  }
  for (std::size_t j = 1; j < dim; ++j) A[j * dim + j] += ridge;

  const std::vector<double> beta = solve_linear(std::move(A), std::move(rhs));
  LimeExplanation out;
  out.intercept = beta[0];
  out.weights.assign(beta.begin() + 1, beta.end());
  out.n_samples = masks.size();
  out.kernel_width = kernel_width;
  out.ridge = ridge;
  return out;
}

Image apply_mask(const Image& img, const Partition& part, const std::vector<double>& mask,
                 FillMode fill, std::uint64_t seed) {
  if (mask.size() != part.num_regions) {
    throw ValidationError("apply_mask: one mask entry per segment required");
  }
  std::vector<std::uint32_t> removed;
  for (std::uint32_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0.0) removed.push_back(i);
  }
  return perturb_segments(img, part, removed, removed.size(), fill, seed);
}

LimeExplanation lime_explain(const LayeredNetwork& model, const Image& img, const Partition& part,
                             std::size_t n_samples, double kernel_width, double ridge,
                             std::uint64_t seed, FillMode fill) {
  const std::size_t m = part.num_regions;
  if (n_samples < m + 1) {
    throw ValidationError("lime_explain: n_samples must be at least m+1");
  }
  const Tensor logits = forward(model, img.to_tensor()).logits();
  const std::size_t cls = argmax(logits);

  for (std::size_t attempt = 0; attempt < 3; ++attempt) {
    Rng mask_rng(derive_seed(seed, 0x11BE, attempt));
    std::vector<std::vector<double>> masks(n_samples, std::vector<double>(m));
    std::vector<double> responses(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
      for (std::size_t j = 0; j < m; ++j) masks[s][j] = mask_rng.uniform() < 0.5 ? 0.0 : 1.0;
      const Image masked =
          apply_mask(img, part, masks[s], fill, derive_seed(seed, attempt, s));
      responses[s] = softmax(forward(model, masked.to_tensor()).logits())[cls];
    }
    try {
      LimeExplanation out = lime_fit(masks, responses, kernel_width, ridge);
      out.seed = seed;
      out.attempts = attempt + 1;
      return out;
    } catch (const NumericError&) {
      if (attempt == 2) throw;
    }
  }
  throw NumericError("lime: unreachable");  // loop always returns or throws
}

}  // namespace mlfx
