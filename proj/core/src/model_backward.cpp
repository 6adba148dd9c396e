#include "procwarm/model.hpp"

#include "model_detail.hpp"

namespace procwarm::model {

namespace {

using detail::apply_gain;
using detail::grad_slot;
using detail::layer_norm_backward;

template <typename T, typename A, typename B>
void set_matmul(Tensor<T>* slot, const A& a, const B& b) {
    if (slot) as_matrix(*slot) = a.transpose() * b;
}

template <typename T, typename A>
void set_colsum(Tensor<T>* slot, const A& dy) {
    if (slot) as_vector(*slot) = dy.colwise().sum().transpose();
}

template <typename T>
RowMat<T> block_backward(const ParamStore<T>& m, int b, int batch, int tokens,
                         const BlockCache<T>& c, const RowMat<T>& dxout, GradMap<T>& g) {
    const std::string p = block_prefix(b);
    const int heads = m.config.heads;
    const int dh = m.config.head_dim();
    const T scale = T(1) / std::sqrt(T(dh));

    set_matmul(grad_slot(m, g, p + "mlp.w2"), c.hact, dxout);
    set_colsum(grad_slot(m, g, p + "mlp.b2"), dxout);
    const RowMat<T> dhact = dxout * as_matrix(m.at(p + "mlp.w2")).transpose();
    const RowMat<T> dhpre =
        (dhact.array() * c.hpre.unaryExpr([](T u) { return detail::gelu_grad(u); }).array())
            .matrix();
    const RowMat<T> y2 = apply_gain(c.n2, m.at(p + "mlp.norm.gamma"), m.at(p + "mlp.norm.beta"));
    set_matmul(grad_slot(m, g, p + "mlp.w1"), y2, dhpre);
    set_colsum(grad_slot(m, g, p + "mlp.b1"), dhpre);
    const RowMat<T> dy2 = dhpre * as_matrix(m.at(p + "mlp.w1")).transpose();
    RowMat<T> dx1 = dxout + layer_norm_backward(dy2, c.n2, c.rstd2, m.at(p + "mlp.norm.gamma"),
                                                grad_slot(m, g, p + "mlp.norm.gamma"),
                                                grad_slot(m, g, p + "mlp.norm.beta"));

    set_matmul(grad_slot(m, g, p + "attn.wo"), c.ctx, dx1);
    set_colsum(grad_slot(m, g, p + "attn.bo"), dx1);
    const RowMat<T> dctx = dx1 * as_matrix(m.at(p + "attn.wo")).transpose();

    RowMat<T> dq(dctx.rows(), dctx.cols());
    RowMat<T> dk(dctx.rows(), dctx.cols());
    RowMat<T> dv(dctx.rows(), dctx.cols());
    for (int e = 0; e < batch; ++e) {
        for (int h = 0; h < heads; ++h) {
            const RowMat<T>& probs = c.probs[static_cast<std::size_t>(e) * heads + h];
            const auto q = c.q.block(e * tokens, h * dh, tokens, dh);
            const auto k = c.k.block(e * tokens, h * dh, tokens, dh);
            const auto v = c.v.block(e * tokens, h * dh, tokens, dh);
            const auto dctx_h = dctx.block(e * tokens, h * dh, tokens, dh);

            const RowMat<T> dp = dctx_h * v.transpose();
            const ColVec<T> rowdot = (dp.array() * probs.array()).rowwise().sum().matrix();
            const RowMat<T> ds =
                (probs.array() * (dp.colwise() - rowdot).array()).matrix() * scale;

            dv.block(e * tokens, h * dh, tokens, dh) = probs.transpose() * dctx_h;
            dq.block(e * tokens, h * dh, tokens, dh) = ds * k;
            dk.block(e * tokens, h * dh, tokens, dh) = ds.transpose() * q;
        }
    }

    const RowMat<T> y1 = apply_gain(c.n1, m.at(p + "attn.norm.gamma"), m.at(p + "attn.norm.beta"));
    set_matmul(grad_slot(m, g, p + "attn.wq"), y1, dq);
    set_colsum(grad_slot(m, g, p + "attn.bq"), dq);
    set_matmul(grad_slot(m, g, p + "attn.wk"), y1, dk);
    set_colsum(grad_slot(m, g, p + "attn.bk"), dk);
    set_matmul(grad_slot(m, g, p + "attn.wv"), y1, dv);
    set_colsum(grad_slot(m, g, p + "attn.bv"), dv);
    RowMat<T> dy1 = dq * as_matrix(m.at(p + "attn.wq")).transpose();
    dy1 += dk * as_matrix(m.at(p + "attn.wk")).transpose();
    dy1 += dv * as_matrix(m.at(p + "attn.wv")).transpose();
    return dx1 + layer_norm_backward(dy1, c.n1, c.rstd1, m.at(p + "attn.norm.gamma"),
                                     grad_slot(m, g, p + "attn.norm.gamma"),
                                     grad_slot(m, g, p + "attn.norm.beta"));
}

template <typename T>
RowMat<T> head_and_blocks_backward(const ParamStore<T>& m, const ForwardCache<T>& cache,
                                   const RowMat<T>& dyf, GradMap<T>& g) {
    RowMat<T> dx = layer_norm_backward(dyf, cache.nf, cache.rstdf, m.at("final_norm.gamma"),
                                       grad_slot(m, g, "final_norm.gamma"),
                                       grad_slot(m, g, "final_norm.beta"));
    for (int b = m.config.depth - 1; b >= 0; --b) {
        dx = block_backward(m, b, cache.batch, cache.tokens,
                            cache.blocks[static_cast<std::size_t>(b)], dx, g);
    }
    return dx;
}

}  // namespace

template <typename T>
GradMap<T> backward_tokens(const ParamStore<T>& m, const std::vector<std::uint16_t>& ids,
                           const ForwardCache<T>& cache, const Tensor<T>& dlogits) {
    const int batch = cache.batch;
    const int n = cache.tokens;
    const int vocab = m.config.vocab_size_with_mask - 1;
    check_shape(dlogits.shape, {batch, n, vocab}, "dlogits");
    if (ids.size() != static_cast<std::size_t>(batch) * n) {
        throw ValidationError("id buffer does not match the cached batch");
    }

    GradMap<T> g;
    const ConstMatMap<T> dl(dlogits.data.data(), static_cast<Eigen::Index>(batch) * n, vocab);
    const RowMat<T> yf = apply_gain(cache.nf, m.at("final_norm.gamma"), m.at("final_norm.beta"));
    set_matmul(grad_slot(m, g, "mask_head.w"), yf, dl);
    set_colsum(grad_slot(m, g, "mask_head.b"), dl);

    const RowMat<T> dyf = dl * as_matrix(m.at("mask_head.w")).transpose();
    const RowMat<T> dx = head_and_blocks_backward(m, cache, dyf, g);

    if (Tensor<T>* demb = grad_slot(m, g, "token_embedding")) {
        auto dm = as_matrix(*demb);
        for (Eigen::Index i = 0; i < dx.rows(); ++i) {
            dm.row(ids[static_cast<std::size_t>(i)]) += dx.row(i);
        }
    }
    if (Tensor<T>* dpos = grad_slot(m, g, "pos_embedding")) {
        auto dm = as_matrix(*dpos);
        for (Eigen::Index i = 0; i < dx.rows(); ++i) dm.row(i % n) += dx.row(i);
    }
    detail::check_finite(g);
    return g;
}

template <typename T>
GradMap<T> backward_image(const ParamStore<T>& m, const ForwardCache<T>& cache,
                          const Tensor<T>& dlogits) {
    const int batch = cache.batch;
    const int tokens = cache.tokens;
    const int pcount = tokens - 1;
    const int d = m.config.width;
    check_shape(dlogits.shape, {batch, m.config.num_classes}, "dlogits");

    GradMap<T> g;
    const ConstMatMap<T> dl(dlogits.data.data(), batch, m.config.num_classes);
    const RowMat<T> yf = apply_gain(cache.nf, m.at("final_norm.gamma"), m.at("final_norm.beta"));
    RowMat<T> ycls(batch, d);
    for (int e = 0; e < batch; ++e) ycls.row(e) = yf.row(static_cast<Eigen::Index>(e) * tokens);
    set_matmul(grad_slot(m, g, "class_head.w"), ycls, dl);
    set_colsum(grad_slot(m, g, "class_head.b"), dl);

    RowMat<T> dyf = RowMat<T>::Zero(static_cast<Eigen::Index>(batch) * tokens, d);
    const auto wh = as_matrix(m.at("class_head.w"));
    for (int e = 0; e < batch; ++e) {
        dyf.row(static_cast<Eigen::Index>(e) * tokens) = dl.row(e) * wh.transpose();
    }
    const RowMat<T> dx = head_and_blocks_backward(m, cache, dyf, g);

    Tensor<T>* dcls = grad_slot(m, g, "class_token");
    Tensor<T>* dpos = grad_slot(m, g, "pos_embedding");
    RowMat<T> dproj(static_cast<Eigen::Index>(batch) * pcount, d);
    for (int e = 0; e < batch; ++e) {
        const Eigen::Index base = static_cast<Eigen::Index>(e) * tokens;
        if (dcls) as_matrix(*dcls).row(0) += dx.row(base);
        if (dpos) as_matrix(*dpos).row(0) += dx.row(base);
        for (int p = 0; p < pcount; ++p) {
            dproj.row(static_cast<Eigen::Index>(e) * pcount + p) = dx.row(base + 1 + p);
            if (dpos) as_matrix(*dpos).row(1 + p) += dx.row(base + 1 + p);
        }
    }
    set_matmul(grad_slot(m, g, "patch_embedding.w"), cache.patches, dproj);
    set_colsum(grad_slot(m, g, "patch_embedding.b"), dproj);
    detail::check_finite(g);
    return g;
}

template GradMap<float> backward_tokens<float>(const ParamStore<float>&,
                                               const std::vector<std::uint16_t>&,
                                               const ForwardCache<float>&, const Tensor<float>&);
template GradMap<double> backward_tokens<double>(const ParamStore<double>&,
                                                 const std::vector<std::uint16_t>&,
                                                 const ForwardCache<double>&,
                                                 const Tensor<double>&);
template GradMap<float> backward_image<float>(const ParamStore<float>&,
                                              const ForwardCache<float>&, const Tensor<float>&);
template GradMap<double> backward_image<double>(const ParamStore<double>&,
                                                const ForwardCache<double>&,
                                                const Tensor<double>&);

}  // namespace procwarm::model
