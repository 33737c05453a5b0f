#include <cmath>
#include <memory>
#include <numeric>

#include "smelab/objectives.hpp"
#include "smelab/rng.hpp"

namespace smelab {

namespace {

// Dataset + architecture shared by all sample closures of one classifier.
struct MlpData {
    std::vector<int> widths;
    int n = 0;
    int dim = 0;                 // packed parameter count
    double lambda = 1e-3;        // l2 penalty weight
    std::vector<Vector> inputs;  // one 2-vector per sample
    std::vector<int> labels;     // 0 or 1
    Vector init;                 // deterministic initial parameters

    // layer l uses W_l (widths[l+1] x widths[l]) then bias (widths[l+1])
    std::vector<std::pair<int, int>> w_offsets;  // (offset, rows*cols)
    std::vector<std::pair<int, int>> b_offsets;
};

Eigen::Map<const Matrix> weight(const MlpData& d, const Vector& theta, int l) {
    return Eigen::Map<const Matrix>(theta.data() + d.w_offsets[l].first,
                                    d.widths[l + 1], d.widths[l]);
}

Eigen::Map<const Vector> bias(const MlpData& d, const Vector& theta, int l) {
    return Eigen::Map<const Vector>(theta.data() + d.b_offsets[l].first,
                                    d.widths[l + 1]);
}

double sample_loss_grad(const MlpData& d, int i, const Vector& theta, Vector* grad) {
    const int layers = static_cast<int>(d.widths.size()) - 1;
    std::vector<Vector> acts(layers + 1);  // acts[0] = input, acts[l] = post-layer l
    acts[0] = d.inputs[i];
    for (int l = 0; l < layers; ++l) {
        Vector z = weight(d, theta, l) * acts[l] + bias(d, theta, l);
        if (l + 1 < layers) z = z.array().tanh().matrix();
        acts[l + 1] = std::move(z);
    }

    // stable softmax cross-entropy on the final logits
    const Vector& logits = acts[layers];
    double zmax = logits.maxCoeff();
    Vector p = (logits.array() - zmax).exp().matrix();
    p /= p.sum();
    double loss = -std::log(std::max(p[d.labels[i]], 1e-300)) +
                  d.lambda * theta.squaredNorm();
    if (!grad) return loss;

    grad->setZero();
    Vector delta = p;
    delta[d.labels[i]] -= 1.0;
    for (int l = layers - 1; l >= 0; --l) {
        Eigen::Map<Matrix> gw(grad->data() + d.w_offsets[l].first,
                              d.widths[l + 1], d.widths[l]);
        Eigen::Map<Vector> gb(grad->data() + d.b_offsets[l].first, d.widths[l + 1]);
        gw.noalias() = delta * acts[l].transpose();
        gb = delta;
        if (l > 0) {
            Vector dh = weight(d, theta, l).transpose() * delta;
            delta = (dh.array() * (1.0 - acts[l].array().square())).matrix();
        }
    }
    *grad += 2.0 * d.lambda * theta;
    return loss;
}

}  // namespace

FiniteSumObjective make_synthetic_classifier(const std::vector<int>& widths,
                                             int n_samples, std::uint64_t seed) {
    if (widths.size() < 2) throw std::invalid_argument("classifier needs >= 2 layer widths");
    for (int w : widths)
        if (w < 1) throw std::invalid_argument("classifier widths must be positive");
    if (widths.front() != 2 || widths.back() != 2)
        throw std::invalid_argument("classifier expects 2 inputs and 2 classes");
    if (n_samples < 2) throw std::invalid_argument("classifier needs n_samples >= 2");

    auto data = std::make_shared<MlpData>();
    data->widths = widths;
    data->n = n_samples;

    int offset = 0;
    const int layers = static_cast<int>(widths.size()) - 1;
    for (int l = 0; l < layers; ++l) {
        int wsize = widths[l + 1] * widths[l];
        data->w_offsets.emplace_back(offset, wsize);
        offset += wsize;
        data->b_offsets.emplace_back(offset, widths[l + 1]);
        offset += widths[l + 1];
    }
    data->dim = offset;

    // Two overlapping Gaussian blobs at +-(1.5, 1.5), unit spread; the
    // overlap keeps the optimal cross-entropy (and the gradient noise)
    // strictly positive.
    RngStream stream = make_stream(seed, 0);
    const double center = 1.5, spread = 1.0;
    int half = n_samples / 2;
    for (int i = 0; i < n_samples; ++i) {
        double sign = i < half ? 1.0 : -1.0;
        Vector x(2);
        x[0] = sign * center + spread * stream.normal();
        x[1] = sign * center + spread * stream.normal();
        data->inputs.push_back(x);
        data->labels.push_back(i < half ? 0 : 1);
    }
    // Fisher-Yates shuffle so class blocks interleave under epoch sampling.
    for (int i = n_samples - 1; i > 0; --i) {
        long j = stream.uniform_int(i + 1);
        std::swap(data->inputs[i], data->inputs[j]);
        std::swap(data->labels[i], data->labels[j]);
    }

    data->init = Vector::Zero(data->dim);
    for (int l = 0; l < layers; ++l) {
        double limit = std::sqrt(6.0 / (widths[l] + widths[l + 1]));
        auto [off, count] = data->w_offsets[l];
        for (int k = 0; k < count; ++k)
            data->init[off + k] = limit * (2.0 * stream.uniform() - 1.0);
        // biases start at zero
    }

    FiniteSumObjective obj;
    obj.name = "synthetic-mlp";
    obj.n = n_samples;
    obj.dim = data->dim;
    obj.default_x0 = data->init;
    obj.sample_value = [data](int i, const Vector& theta) {
        return sample_loss_grad(*data, i, theta, nullptr);
    };
    obj.sample_gradient = [data](int i, const Vector& theta) {
        Vector g(data->dim);
        sample_loss_grad(*data, i, theta, &g);
        return g;
    };
    return obj;
}

}  // namespace smelab
