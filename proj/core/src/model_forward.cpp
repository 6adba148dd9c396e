#include "procwarm/model.hpp"

#include "model_detail.hpp"

namespace procwarm::model {

namespace {

using detail::apply_gain;
using detail::layer_norm;

template <typename T>
RowMat<T> linear(const RowMat<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    RowMat<T> y = x * as_matrix(w);
    y.array().rowwise() += as_vector(b).transpose().array();
    return y;
}

template <typename T>
void softmax_rows(RowMat<T>& s) {
    const ColVec<T> mx = s.rowwise().maxCoeff();
    s = (s.colwise() - mx).array().exp().matrix();
    const ColVec<T> z = s.rowwise().sum();
    s.array().colwise() /= z.array();
}

// Runs the residual block stack in place over x: (batch*tokens, width).
template <typename T>
void run_blocks(const ParamStore<T>& m, RowMat<T>& x, int batch, int tokens,
                ForwardCache<T>& cache) {
    const int heads = m.config.heads;
    const int dh = m.config.head_dim();
    const T scale = T(1) / std::sqrt(T(dh));
    cache.blocks.assign(static_cast<std::size_t>(m.config.depth), BlockCache<T>{});

    for (int b = 0; b < m.config.depth; ++b) {
        const std::string p = block_prefix(b);
        BlockCache<T>& c = cache.blocks[static_cast<std::size_t>(b)];

        layer_norm(x, c.n1, c.rstd1);
        const RowMat<T> y1 = apply_gain(c.n1, m.at(p + "attn.norm.gamma"),
                                        m.at(p + "attn.norm.beta"));
        c.q = linear(y1, m.at(p + "attn.wq"), m.at(p + "attn.bq"));
        c.k = linear(y1, m.at(p + "attn.wk"), m.at(p + "attn.bk"));
        c.v = linear(y1, m.at(p + "attn.wv"), m.at(p + "attn.bv"));

        c.ctx.resize(x.rows(), x.cols());
        c.probs.assign(static_cast<std::size_t>(batch) * heads, RowMat<T>{});
        for (int e = 0; e < batch; ++e) {
            for (int h = 0; h < heads; ++h) {
                const auto q = c.q.block(e * tokens, h * dh, tokens, dh);
                const auto k = c.k.block(e * tokens, h * dh, tokens, dh);
                const auto v = c.v.block(e * tokens, h * dh, tokens, dh);
                RowMat<T>& probs = c.probs[static_cast<std::size_t>(e) * heads + h];
                probs = (q * k.transpose()) * scale;
                softmax_rows(probs);
                c.ctx.block(e * tokens, h * dh, tokens, dh) = probs * v;
            }
        }
        x += linear(c.ctx, m.at(p + "attn.wo"), m.at(p + "attn.bo"));

        layer_norm(x, c.n2, c.rstd2);
        const RowMat<T> y2 =
            apply_gain(c.n2, m.at(p + "mlp.norm.gamma"), m.at(p + "mlp.norm.beta"));
        c.hpre = linear(y2, m.at(p + "mlp.w1"), m.at(p + "mlp.b1"));
        c.hact = c.hpre.unaryExpr([](T u) { return detail::gelu(u); });
        x += linear(c.hact, m.at(p + "mlp.w2"), m.at(p + "mlp.b2"));
    }
}

}  // namespace

template <typename T>
Tensor<T> forward_tokens(const ParamStore<T>& m, const std::vector<std::uint16_t>& ids,
                         int batch, ForwardCache<T>* cache) {
    if (m.stage != Stage::Warmup) {
        throw ValidationError("forward_tokens requires a warmup-stage checkpoint");
    }
    const int n = m.config.seq_len;
    const int d = m.config.width;
    if (batch < 1 || ids.size() != static_cast<std::size_t>(batch) * n) {
        throw ValidationError("id buffer has " + std::to_string(ids.size()) +
                              " entries, want batch*seq_len = " + std::to_string(batch * n));
    }
    const auto emb = as_matrix(m.at("token_embedding"));
    const auto pos = as_matrix(m.at("pos_embedding"));

    RowMat<T> x(static_cast<Eigen::Index>(batch) * n, d);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const std::uint16_t id = ids[static_cast<std::size_t>(i)];
        if (id >= m.config.vocab_size_with_mask) {
            throw ValidationError("token id out of range: " + std::to_string(id));
        }
        x.row(i) = emb.row(id) + pos.row(i % n);
    }

    ForwardCache<T> local;
    ForwardCache<T>& c = cache ? *cache : local;
    c.batch = batch;
    c.tokens = n;
    run_blocks(m, x, batch, n, c);
    layer_norm(x, c.nf, c.rstdf);
    const RowMat<T> yf = apply_gain(c.nf, m.at("final_norm.gamma"), m.at("final_norm.beta"));

    const int vocab = m.config.vocab_size_with_mask - 1;
    Tensor<T> logits({batch, n, vocab});
    MatMap<T>(logits.data.data(), static_cast<Eigen::Index>(batch) * n, vocab) =
        linear(yf, m.at("mask_head.w"), m.at("mask_head.b"));
    return logits;
}

template <typename T>
Tensor<T> forward_image(const ParamStore<T>& m, const Tensor<T>& images, ForwardCache<T>* cache) {
    if (m.stage != Stage::Vision) {
        throw ValidationError("forward_image requires a vision-stage checkpoint");
    }
    const ModelConfig& cfg = m.config;
    if (images.shape.size() != 4 || images.shape[1] != cfg.image_channels ||
        images.shape[2] != cfg.image_size || images.shape[3] != cfg.image_size) {
        throw ValidationError("image batch must be (batch, " +
                              std::to_string(cfg.image_channels) + ", " +
                              std::to_string(cfg.image_size) + ", " +
                              std::to_string(cfg.image_size) + ")");
    }
    const int batch = static_cast<int>(images.shape[0]);
    const int side = cfg.patches_per_side();
    const int ps = cfg.patch_size;
    const int pcount = cfg.patch_count();
    const int pdim = cfg.patch_dim();
    const int tokens = pcount + 1;
    const int d = cfg.width;

    ForwardCache<T> local;
    ForwardCache<T>& c = cache ? *cache : local;
    c.batch = batch;
    c.tokens = tokens;

    c.patches.resize(static_cast<Eigen::Index>(batch) * pcount, pdim);
    const std::size_t plane = static_cast<std::size_t>(cfg.image_size) * cfg.image_size;
    for (int e = 0; e < batch; ++e) {
        const T* img = images.data.data() + static_cast<std::size_t>(e) * cfg.image_channels * plane;
        for (int py = 0; py < side; ++py) {
            for (int px = 0; px < side; ++px) {
                T* row = c.patches.row(static_cast<Eigen::Index>(e) * pcount + py * side + px).data();
                std::size_t f = 0;
                for (int ch = 0; ch < cfg.image_channels; ++ch) {
                    for (int dy = 0; dy < ps; ++dy) {
                        const T* src = img + ch * plane +
                                       static_cast<std::size_t>(py * ps + dy) * cfg.image_size +
                                       static_cast<std::size_t>(px) * ps;
                        for (int dx = 0; dx < ps; ++dx) row[f++] = src[dx];
                    }
                }
            }
        }
    }

    const RowMat<T> proj = linear(c.patches, m.at("patch_embedding.w"), m.at("patch_embedding.b"));
    const auto pos = as_matrix(m.at("pos_embedding"));
    const auto cls = as_matrix(m.at("class_token"));

    RowMat<T> x(static_cast<Eigen::Index>(batch) * tokens, d);
    for (int e = 0; e < batch; ++e) {
        x.row(static_cast<Eigen::Index>(e) * tokens) = cls.row(0) + pos.row(0);
        for (int p = 0; p < pcount; ++p) {
            x.row(static_cast<Eigen::Index>(e) * tokens + 1 + p) =
                proj.row(static_cast<Eigen::Index>(e) * pcount + p) + pos.row(1 + p);
        }
    }

    run_blocks(m, x, batch, tokens, c);
    layer_norm(x, c.nf, c.rstdf);
    const RowMat<T> yf = apply_gain(c.nf, m.at("final_norm.gamma"), m.at("final_norm.beta"));

    Tensor<T> logits({batch, cfg.num_classes});
    MatMap<T> out(logits.data.data(), batch, cfg.num_classes);
    const auto wh = as_matrix(m.at("class_head.w"));
    const auto bh = as_vector(m.at("class_head.b"));
    for (int e = 0; e < batch; ++e) {
        out.row(e) = yf.row(static_cast<Eigen::Index>(e) * tokens) * wh + bh.transpose();
    }
    return logits;
}

template Tensor<float> forward_tokens<float>(const ParamStore<float>&,
                                             const std::vector<std::uint16_t>&, int,
                                             ForwardCache<float>*);
template Tensor<double> forward_tokens<double>(const ParamStore<double>&,
                                               const std::vector<std::uint16_t>&, int,
                                               ForwardCache<double>*);
template Tensor<float> forward_image<float>(const ParamStore<float>&, const Tensor<float>&,
                                            ForwardCache<float>*);
template Tensor<double> forward_image<double>(const ParamStore<double>&, const Tensor<double>&,
                                              ForwardCache<double>*);

}  // namespace procwarm::model
