#include "xdhs/nn/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "xdhs/nn/parallel.hpp"

namespace xdhs::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// Upper bound on im2col buffer elements per chunk.
constexpr std::size_t kChunkElements = std::size_t{1} << 21;

struct ConvGeometry {
    std::size_t cin, cout, height, width, kernel, pad;

    std::size_t patch() const { return cin * kernel * kernel; }
    std::size_t pixels() const { return height * width; }
};

// Output rows are split into fixed chunks that depend only on the geometry, so
// partial sums are combined in the same order for any worker count.
struct ChunkPlan {
    std::size_t rows_per_chunk;
    std::size_t count;

    explicit ChunkPlan(const ConvGeometry& g) {
        const std::size_t per_row = g.patch() * g.width;
        rows_per_chunk = std::clamp<std::size_t>(kChunkElements / std::max<std::size_t>(per_row, 1), 1, g.height);
        count = (g.height + rows_per_chunk - 1) / rows_per_chunk;
    }
    std::size_t first_row(std::size_t chunk) const { return chunk * rows_per_chunk; }
    std::size_t rows(std::size_t chunk, std::size_t height) const {
        return std::min(rows_per_chunk, height - first_row(chunk));
    }
};

template <typename T>
void im2col(const T* input, const ConvGeometry& g, std::size_t row0, std::size_t rows, T* cols) {
    const std::size_t len = rows * g.width;
    const auto pad = static_cast<std::ptrdiff_t>(g.pad);
    const auto h = static_cast<std::ptrdiff_t>(g.height);
    const auto w = static_cast<std::ptrdiff_t>(g.width);
    for (std::size_t c = 0; c < g.cin; ++c) {
        const T* plane = input + c * g.pixels();
        for (std::size_t dy = 0; dy < g.kernel; ++dy) {
            for (std::size_t dx = 0; dx < g.kernel; ++dx) {
                T* dst = cols + ((c * g.kernel + dy) * g.kernel + dx) * len;
                for (std::size_t r = 0; r < rows; ++r) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(row0 + r + dy) - pad;
                    T* out_row = dst + r * g.width;
                    if (iy < 0 || iy >= h) {
                        std::fill(out_row, out_row + g.width, T(0));
                        continue;
                    }
                    const T* in_row = plane + iy * w;
                    for (std::ptrdiff_t x = 0; x < w; ++x) {
                        const std::ptrdiff_t ix = x + static_cast<std::ptrdiff_t>(dx) - pad;
                        out_row[x] = (ix >= 0 && ix < w) ? in_row[ix] : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, std::size_t row0, std::size_t rows, T* grad_input) {
    const std::size_t len = rows * g.width;
    const auto pad = static_cast<std::ptrdiff_t>(g.pad);
    const auto h = static_cast<std::ptrdiff_t>(g.height);
    const auto w = static_cast<std::ptrdiff_t>(g.width);
    for (std::size_t c = 0; c < g.cin; ++c) {
        T* plane = grad_input + c * g.pixels();
        for (std::size_t dy = 0; dy < g.kernel; ++dy) {
            for (std::size_t dx = 0; dx < g.kernel; ++dx) {
                const T* src = cols + ((c * g.kernel + dy) * g.kernel + dx) * len;
                for (std::size_t r = 0; r < rows; ++r) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(row0 + r + dy) - pad;
                    if (iy < 0 || iy >= h) continue;
                    const T* in_row = src + r * g.width;
                    T* out_row = plane + iy * w;
                    for (std::ptrdiff_t x = 0; x < w; ++x) {
                        const std::ptrdiff_t ix = x + static_cast<std::ptrdiff_t>(dx) - pad;
                        if (ix >= 0 && ix < w) out_row[ix] += in_row[x];
                    }
                }
            }
        }
    }
}

template <typename T>
void conv_forward(const Tensor<T>& input, const Tensor<T>& weight, const ConvGeometry& g, Tensor<T>& out) {
    const ConstMatMap<T> wmat(weight.data().data(), g.cout, g.patch());
    MatMap<T> omat(out.data().data(), g.cout, g.pixels());
    const ChunkPlan plan(g);
    parallel_for(plan.count, [&](std::size_t chunk) {
        const std::size_t row0 = plan.first_row(chunk);
        const std::size_t rows = plan.rows(chunk, g.height);
        const std::size_t len = rows * g.width;
        if (g.kernel == 1) {
            const Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>> xmat(
                input.data().data() + row0 * g.width, g.cin, len, Eigen::OuterStride<>(g.pixels()));
            omat.middleCols(row0 * g.width, len).noalias() = wmat * xmat;
        } else {
            std::vector<T> cols(g.patch() * len);
            im2col(input.data().data(), g, row0, rows, cols.data());
            omat.middleCols(row0 * g.width, len).noalias() = wmat * ConstMatMap<T>(cols.data(), g.patch(), len);
        }
    });
}

template <typename T>
void conv_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out, const ConvGeometry& g,
                   Tensor<T>* grad_input, Tensor<T>* grad_weight) {
    const ConstMatMap<T> wmat(weight.data().data(), g.cout, g.patch());
    const ConstMatMap<T> gmat(grad_out.data().data(), g.cout, g.pixels());
    const ChunkPlan plan(g);

    std::vector<RowMat<T>> partial_dw(grad_weight ? plan.count : 0);
    std::vector<std::vector<T>> dcols(grad_input && g.kernel != 1 ? plan.count : 0);
    parallel_for(plan.count, [&](std::size_t chunk) {
        const std::size_t row0 = plan.first_row(chunk);
        const std::size_t rows = plan.rows(chunk, g.height);
        const std::size_t len = rows * g.width;
        const auto gchunk = gmat.middleCols(row0 * g.width, len);
        if (g.kernel == 1) {
            const Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>> xmat(
                input.data().data() + row0 * g.width, g.cin, len, Eigen::OuterStride<>(g.pixels()));
            if (grad_weight) partial_dw[chunk].noalias() = gchunk * xmat.transpose();
            if (grad_input) {
                Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>> dx(grad_input->data().data() + row0 * g.width, g.cin,
                                                                   len, Eigen::OuterStride<>(g.pixels()));
                dx.noalias() += wmat.transpose() * gchunk;
            }
            return;
        }
        if (grad_weight) {
            std::vector<T> cols(g.patch() * len);
            im2col(input.data().data(), g, row0, rows, cols.data());
            partial_dw[chunk].noalias() = gchunk * ConstMatMap<T>(cols.data(), g.patch(), len).transpose();
        }
        if (grad_input) {
            dcols[chunk].resize(g.patch() * len);
            MatMap<T>(dcols[chunk].data(), g.patch(), len).noalias() = wmat.transpose() * gchunk;
        }
    });
    if (grad_weight) {
        MatMap<T> dw(grad_weight->data().data(), g.cout, g.patch());
        for (const auto& p : partial_dw) dw += p;
    }
    if (grad_input && g.kernel != 1) {
        for (std::size_t chunk = 0; chunk < plan.count; ++chunk)
            col2im_add(dcols[chunk].data(), g, plan.first_row(chunk), plan.rows(chunk, g.height),
                       grad_input->data().data());
    }
}

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* what) {
    if (s.size() != rank)
        throw std::invalid_argument(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                                    ", got shape " + shape_str(s));
}

template <typename T>
void check_loss_inputs(const Tensor<T>& logits, const data::LabelMap& labels, std::span<const data::Pixel> mask,
                       const char* op) {
    require_rank(logits.shape(), 3, op, "logits");
    if (logits.dim(1) != labels.height || logits.dim(2) != labels.width)
        throw std::invalid_argument(std::string(op) + ": logits spatial size " + shape_str(logits.shape()) +
                                    " does not match label map " + std::to_string(labels.height) + "x" +
                                    std::to_string(labels.width));
    if (logits.dim(0) != labels.classes)
        throw std::invalid_argument(std::string(op) + ": logits have " + std::to_string(logits.dim(0)) +
                                    " channels but the label map has " + std::to_string(labels.classes) + " classes");
    if (mask.empty()) throw std::invalid_argument(std::string(op) + ": empty pixel mask");
    for (const auto& px : mask) {
        if (px.row >= labels.height || px.col >= labels.width)
            throw std::invalid_argument(std::string(op) + ": mask pixel outside the image");
        const auto l = labels.at(px.row, px.col);
        if (l == 0 || l > labels.classes)
            throw std::invalid_argument(std::string(op) + ": masked pixel (" + std::to_string(px.row) + "," +
                                        std::to_string(px.col) + ") has label " + std::to_string(l) +
                                        ", expected 1.." + std::to_string(labels.classes));
    }
}

// Per-pixel log-softmax over the channel axis, in double.
template <typename T>
void log_softmax_at(const Tensor<T>& logits, std::size_t row, std::size_t col, std::vector<double>& logp) {
    const std::size_t classes = logits.dim(0);
    logp.resize(classes);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < classes; ++j) m = std::max(m, static_cast<double>(logits.at(j, row, col)));
    double s = 0.0;
    for (std::size_t j = 0; j < classes; ++j) s += std::exp(static_cast<double>(logits.at(j, row, col)) - m);
    const double lse = m + std::log(s);
    for (std::size_t j = 0; j < classes; ++j) logp[j] = static_cast<double>(logits.at(j, row, col)) - lse;
}

// Shared body of both classification losses: per-pixel loss and dloss/dlogit
// as functions of the log-probabilities and the true class index.
template <typename T, typename PixelLoss>
Var masked_classification_loss(Tape<T>& tape, Var logits, const data::LabelMap& labels,
                               std::span<const data::Pixel> mask, const char* op, PixelLoss pixel_loss) {
    const Tensor<T>& z = tape.value(logits);
    check_loss_inputs(z, labels, mask, op);
    const std::size_t classes = z.dim(0);
    const double inv_count = 1.0 / static_cast<double>(mask.size());

    std::vector<data::Pixel> pixels(mask.begin(), mask.end());
    std::vector<std::uint16_t> truth(pixels.size());
    std::vector<double> coeff(pixels.size());
    std::vector<double> logp;
    double total = 0.0;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        truth[i] = labels.at(pixels[i].row, pixels[i].col);
        log_softmax_at(z, pixels[i].row, pixels[i].col, logp);
        const auto [loss, dcoeff] = pixel_loss(logp[truth[i] - 1u], truth[i]);
        total += loss;
        coeff[i] = dcoeff;
    }
    Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total * inv_count));

    return tape.record(std::move(out), {logits},
                       [pixels = std::move(pixels), truth = std::move(truth), coeff = std::move(coeff), classes,
                        inv_count](const typename Tape<T>::BackwardArgs& a) {
                           Tensor<T>* dz = a.grad_inputs[0];
                           if (!dz) return;
                           const Tensor<T>& z = *a.inputs[0];
                           const double g = static_cast<double>(a.grad_output.item()) * inv_count;
                           std::vector<double> logp;
                           for (std::size_t i = 0; i < pixels.size(); ++i) {
                               log_softmax_at(z, pixels[i].row, pixels[i].col, logp);
                               // dL/dz_j = coeff * (p_j - [j == t])
                               for (std::size_t j = 0; j < classes; ++j) {
                                   const double indicator = (j + 1 == truth[i]) ? 1.0 : 0.0;
                                   dz->at(j, pixels[i].row, pixels[i].col) +=
                                       static_cast<T>(g * coeff[i] * (std::exp(logp[j]) - indicator));
                               }
                           }
                       });
}

} // namespace

template <typename T>
BatchNorm<T> BatchNorm<T>::make(std::size_t channels, const std::string& name) {
    BatchNorm bn;
    bn.gamma = Parameter<T>{name + ".gamma", Tensor<T>::full({channels}, T(1))};
    bn.beta = Parameter<T>{name + ".beta", Tensor<T>({channels})};
    bn.gamma.value.set_requires_grad(true);
    bn.beta.value.set_requires_grad(true);
    bn.running_mean = Tensor<T>({channels});
    bn.running_var = Tensor<T>::full({channels}, T(1));
    return bn;
}

template <typename T>
Var conv2d(Tape<T>& tape, Var input, Var weight, std::size_t pad) {
    const Tensor<T>& x = tape.value(input);
    const Tensor<T>& w = tape.value(weight);
    require_rank(x.shape(), 3, "conv2d", "input");
    require_rank(w.shape(), 4, "conv2d", "weight");
    if (w.dim(2) != w.dim(3)) throw std::invalid_argument("conv2d: kernel must be square, got " + shape_str(w.shape()));
    const std::size_t k = w.dim(2);
    if (k % 2 == 0) throw std::invalid_argument("conv2d: kernel size must be odd, got " + std::to_string(k));
    if (pad != (k - 1) / 2)
        throw std::invalid_argument("conv2d: pad must be (k-1)/2 = " + std::to_string((k - 1) / 2) + ", got " +
                                    std::to_string(pad));
    if (w.dim(1) != x.dim(0))
        throw std::invalid_argument("conv2d: weight expects " + std::to_string(w.dim(1)) +
                                    " input channels but input has " + std::to_string(x.dim(0)) + " (input " +
                                    shape_str(x.shape()) + ", weight " + shape_str(w.shape()) + ")");

    const ConvGeometry g{x.dim(0), w.dim(0), x.dim(1), x.dim(2), k, pad};
    Tensor<T> out({g.cout, g.height, g.width});
    conv_forward(x, w, g, out);
    return tape.record(std::move(out), {input, weight}, [g](const typename Tape<T>::BackwardArgs& a) {
        conv_backward(*a.inputs[0], *a.inputs[1], a.grad_output, g, a.grad_inputs[0], a.grad_inputs[1]);
    });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
    const Tensor<T>& in = tape.value(x);
    Tensor<T> out(in.shape());
    for (std::size_t i = 0; i < in.numel(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
    return tape.record(std::move(out), {x}, [](const typename Tape<T>::BackwardArgs& a) {
        Tensor<T>* dx = a.grad_inputs[0];
        if (!dx) return;
        const Tensor<T>& in = *a.inputs[0];
        for (std::size_t i = 0; i < in.numel(); ++i)
            if (in[i] > T(0)) (*dx)[i] += a.grad_output[i];
    });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
    const Tensor<T>& x = tape.value(a);
    const Tensor<T>& y = tape.value(b);
    if (x.shape() != y.shape())
        throw std::invalid_argument("add: shape mismatch " + shape_str(x.shape()) + " vs " + shape_str(y.shape()));
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] + y[i];
    return tape.record(std::move(out), {a, b}, [](const typename Tape<T>::BackwardArgs& args) {
        for (Tensor<T>* d : args.grad_inputs)
            if (d)
                for (std::size_t i = 0; i < d->numel(); ++i) (*d)[i] += args.grad_output[i];
    });
}

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b) {
    const Tensor<T>& x = tape.value(a);
    const Tensor<T>& y = tape.value(b);
    if (x.shape() != y.shape())
        throw std::invalid_argument("mul: shape mismatch " + shape_str(x.shape()) + " vs " + shape_str(y.shape()));
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] * y[i];
    return tape.record(std::move(out), {a, b}, [](const typename Tape<T>::BackwardArgs& args) {
        const Tensor<T>& x = *args.inputs[0];
        const Tensor<T>& y = *args.inputs[1];
        if (Tensor<T>* dx = args.grad_inputs[0])
            for (std::size_t i = 0; i < x.numel(); ++i) (*dx)[i] += args.grad_output[i] * y[i];
        if (Tensor<T>* dy = args.grad_inputs[1])
            for (std::size_t i = 0; i < y.numel(); ++i) (*dy)[i] += args.grad_output[i] * x[i];
    });
}

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor) {
    const Tensor<T>& in = tape.value(x);
    Tensor<T> out(in.shape());
    for (std::size_t i = 0; i < in.numel(); ++i) out[i] = in[i] * factor;
    return tape.record(std::move(out), {x}, [factor](const typename Tape<T>::BackwardArgs& a) {
        if (Tensor<T>* dx = a.grad_inputs[0])
            for (std::size_t i = 0; i < dx->numel(); ++i) (*dx)[i] += a.grad_output[i] * factor;
    });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
    const Tensor<T>& in = tape.value(x);
    double acc = 0.0;
    for (auto v : in.data()) acc += v;
    return tape.record(Tensor<T>::scalar(static_cast<T>(acc)), {x}, [](const typename Tape<T>::BackwardArgs& a) {
        if (Tensor<T>* dx = a.grad_inputs[0]) {
            const T g = a.grad_output.item();
            for (auto& v : dx->data()) v += g;
        }
    });
}

template <typename T>
Var mean(Tape<T>& tape, Var x) {
    const Tensor<T>& in = tape.value(x);
    double acc = 0.0;
    for (auto v : in.data()) acc += v;
    const T n = static_cast<T>(in.numel());
    return tape.record(Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(in.numel()))), {x}, [n](const typename Tape<T>::BackwardArgs& a) {
        if (Tensor<T>* dx = a.grad_inputs[0]) {
            const T g = a.grad_output.item() / n;
            for (auto& v : dx->data()) v += g;
        }
    });
}

template <typename T>
Var batchnorm(Tape<T>& tape, Var input, BatchNorm<T>& state, Mode mode) {
    // Registering parameters may grow the tape, so do it before holding value references.
    const Var gamma = tape.parameter(state.gamma);
    const Var beta = tape.parameter(state.beta);
    const Tensor<T>& x = tape.value(input);
    require_rank(x.shape(), 3, "batchnorm", "input");
    const std::size_t channels = x.dim(0);
    if (channels != state.channels())
        throw std::invalid_argument("batchnorm: input has " + std::to_string(channels) + " channels, layer '" +
                                    state.gamma.name + "' has " + std::to_string(state.channels()));
    if (!(state.epsilon > T(0))) throw std::invalid_argument("batchnorm: epsilon must be positive");
    const std::size_t n = x.dim(1) * x.dim(2);

    std::vector<double> mean(channels), inv_std(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        const T* plane = x.data().data() + c * n;
        if (mode == Mode::train) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += plane[i];
            const double mu = s / static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = plane[i] - mu;
                ss += d * d;
            }
            const double var = ss / static_cast<double>(n);
            mean[c] = mu;
            inv_std[c] = 1.0 / std::sqrt(var + static_cast<double>(state.epsilon));
            state.running_mean[c] = (T(1) - state.momentum) * state.running_mean[c] + state.momentum * static_cast<T>(mu);
            state.running_var[c] = (T(1) - state.momentum) * state.running_var[c] + state.momentum * static_cast<T>(var);
        } else {
            mean[c] = state.running_mean[c];
            inv_std[c] = 1.0 / std::sqrt(static_cast<double>(state.running_var[c]) + static_cast<double>(state.epsilon));
        }
    }

    const Tensor<T>& gv = tape.value(gamma);
    const Tensor<T>& bv = tape.value(beta);
    Tensor<T> out(x.shape());
    for (std::size_t c = 0; c < channels; ++c) {
        const T* src = x.data().data() + c * n;
        T* dst = out.data().data() + c * n;
        const double g = gv[c], b = bv[c];
        for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<T>(g * ((src[i] - mean[c]) * inv_std[c]) + b);
    }

    const bool train = mode == Mode::train;
    return tape.record(
        std::move(out), {input, gamma, beta},
        [mean = std::move(mean), inv_std = std::move(inv_std), channels, n,
         train](const typename Tape<T>::BackwardArgs& a) {
            const Tensor<T>& x = *a.inputs[0];
            const Tensor<T>& gv = *a.inputs[1];
            Tensor<T>* dx = a.grad_inputs[0];
            Tensor<T>* dgamma = a.grad_inputs[1];
            Tensor<T>* dbeta = a.grad_inputs[2];
            for (std::size_t c = 0; c < channels; ++c) {
                const T* src = x.data().data() + c * n;
                const T* g = a.grad_output.data().data() + c * n;
                double sum_g = 0.0, sum_g_xhat = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double xhat = (src[i] - mean[c]) * inv_std[c];
                    sum_g += g[i];
                    sum_g_xhat += g[i] * xhat;
                }
                if (dgamma) (*dgamma)[c] += static_cast<T>(sum_g_xhat);
                if (dbeta) (*dbeta)[c] += static_cast<T>(sum_g);
                if (!dx) continue;
                T* d = dx->data().data() + c * n;
                if (!train) {
                    const double s = gv[c] * inv_std[c];
                    for (std::size_t i = 0; i < n; ++i) d[i] += static_cast<T>(g[i] * s);
                    continue;
                }
                // dx = gamma * inv_std / n * (n g - sum(g) - xhat * sum(g xhat))
                const double nn = static_cast<double>(n);
                const double s = gv[c] * inv_std[c] / nn;
                for (std::size_t i = 0; i < n; ++i) {
                    const double xhat = (src[i] - mean[c]) * inv_std[c];
                    d[i] += static_cast<T>(s * (nn * g[i] - sum_g - xhat * sum_g_xhat));
                }
            }
        });
}

void FocalParams::validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("focal loss: gamma must be >= 0, got " + std::to_string(gamma));
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("focal loss: alpha must lie in (0,1), got " + std::to_string(alpha));
}

template <typename T>
Var softmax_ce_loss(Tape<T>& tape, Var logits, const data::LabelMap& labels, std::span<const data::Pixel> mask) {
    return masked_classification_loss(tape, logits, labels, mask, "softmax_ce_loss",
                                      [](double logp_t, std::uint16_t) { return std::pair{-logp_t, 1.0}; });
}

template <typename T>
Var focal_loss(Tape<T>& tape, Var logits, const data::LabelMap& labels, std::span<const data::Pixel> mask,
               const FocalParams& params) {
    params.validate();
    const double gamma = params.gamma;
    return masked_classification_loss(
        tape, logits, labels, mask, "focal_loss", [&params, gamma](double logp_t, std::uint16_t label) {
            const bool background = params.background_class && *params.background_class == label;
            const double alpha_t = background ? 1.0 - params.alpha : params.alpha;
            const double p = std::exp(logp_t);
            const double one_minus_p = -std::expm1(logp_t);
            const double modulator = std::pow(one_minus_p, gamma);
            // dL/dp_t * p_t = alpha_t * (gamma (1-p)^(gamma-1) p log p - (1-p)^gamma)
            double hard_term = 0.0;
            if (gamma != 0.0 && one_minus_p > 0.0) hard_term = gamma * std::pow(one_minus_p, gamma - 1.0) * p * logp_t;
            const double loss = -alpha_t * modulator * logp_t;
            // masked_classification_loss applies coeff * (p_j - [j == t]), the negation of (delta - p_j).
            const double coeff = -alpha_t * (hard_term - modulator);
            return std::pair{loss, coeff};
        });
}

template <typename T>
data::LabelMap argmax_classes(const Tensor<T>& logits) {
    require_rank(logits.shape(), 3, "argmax_classes", "logits");
    const std::size_t classes = logits.dim(0);
    data::LabelMap out(logits.dim(1), logits.dim(2), static_cast<std::uint16_t>(classes));
    for (std::size_t y = 0; y < out.height; ++y) {
        for (std::size_t x = 0; x < out.width; ++x) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < classes; ++j)
                if (logits.at(j, y, x) > logits.at(best, y, x)) best = j;
            out.at(y, x) = static_cast<std::uint16_t>(best + 1);
        }
    }
    return out;
}

#define XDHS_INSTANTIATE_OPS(T)                                                                                   \
    template struct BatchNorm<T>;                                                                                 \
    template Var conv2d(Tape<T>&, Var, Var, std::size_t);                                                         \
    template Var relu(Tape<T>&, Var);                                                                             \
    template Var add(Tape<T>&, Var, Var);                                                                         \
    template Var mul(Tape<T>&, Var, Var);                                                                         \
    template Var scale(Tape<T>&, Var, T);                                                                         \
    template Var sum(Tape<T>&, Var);                                                                              \
    template Var mean(Tape<T>&, Var);                                                                             \
    template Var batchnorm(Tape<T>&, Var, BatchNorm<T>&, Mode);                                                   \
    template Var softmax_ce_loss(Tape<T>&, Var, const data::LabelMap&, std::span<const data::Pixel>);             \
    template Var focal_loss(Tape<T>&, Var, const data::LabelMap&, std::span<const data::Pixel>, const FocalParams&); \
    template data::LabelMap argmax_classes(const Tensor<T>&);

XDHS_INSTANTIATE_OPS(float)
XDHS_INSTANTIATE_OPS(double)

} // namespace xdhs::nn
