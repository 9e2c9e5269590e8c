#pragma once

#include <cblas.h>

#include <algorithm>
#include <thread>
#include <vector>

extern "C" void openblas_set_num_threads(int);

namespace anoheal::nn {

// BLAS itself runs single-threaded; parallelism comes from the fixed two-way
// splits below so results are bit-identical regardless of machine thread
// counts.
inline void pin_blas_threads() {
    static const bool done = [] {
        openblas_set_num_threads(1);
        return true;
    }();
    (void)done;
}

inline void gemm_raw(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
                     int lda, const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void gemm_raw(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
                     const double* a, int lda, const double* b, int ldb, double beta, double* c,
                     int ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// C = alpha * op(A) * op(B) + beta * C, with half of C computed on a helper
// thread when the problem is big enough. The split halves the larger output
// dimension and is always down the middle, so results do not depend on
// available cores.
template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc) {
    pin_blas_threads();
    const double flops = 2.0 * m * n * k;
    if (flops < 2e7 || std::max(m, n) < 128) {
        gemm_raw(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
        return;
    }
    if (n >= m) {
        const int n_left = n / 2;
        const int n_right = n - n_left;
        // Column offset within op(B): +j when B is not transposed, +j*ldb
        // when it is.
        const T* b_right = trans_b ? b + static_cast<size_t>(n_left) * ldb : b + n_left;
        std::thread helper([&] {
            gemm_raw(trans_a, trans_b, m, n_left, k, alpha, a, lda, b, ldb, beta, c, ldc);
        });
        gemm_raw(trans_a, trans_b, m, n_right, k, alpha, a, lda, b_right, ldb, beta, c + n_left,
                 ldc);
        helper.join();
    } else {
        const int m_top = m / 2;
        const int m_bottom = m - m_top;
        // Row offset within op(A): +i*lda when A is not transposed, +i when
        // it is.
        const T* a_bottom = trans_a ? a + m_top : a + static_cast<size_t>(m_top) * lda;
        T* c_bottom = c + static_cast<size_t>(m_top) * ldc;
        std::thread helper([&] {
            gemm_raw(trans_a, trans_b, m_top, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
        });
        gemm_raw(trans_a, trans_b, m_bottom, n, k, alpha, a_bottom, lda, b, ldb, beta, c_bottom,
                 ldc);
        helper.join();
    }
}

// Accumulating GEMM splitting the reduction dimension: C += A * op(B) with A
// (m x k) not transposed. The two partial products are added in a fixed
// order, keeping the result deterministic.
template <typename T>
void gemm_acc_ksplit(bool trans_b, int m, int n, int k, const T* a, int lda, const T* b, int ldb,
                     T* c, int ldc, std::vector<T>& scratch) {
    pin_blas_threads();
    const double flops = 2.0 * m * n * k;
    if (flops < 2e7 || k < 64) {
        gemm_raw(false, trans_b, m, n, k, T(1), a, lda, b, ldb, T(1), c, ldc);
        return;
    }
    const int k_left = k / 2;
    const int k_right = k - k_left;
    scratch.assign(2 * static_cast<size_t>(m) * n, T(0));
    T* c_left = scratch.data();
    T* c_right = scratch.data() + static_cast<size_t>(m) * n;
    const T* a_right = a + k_left;
    // op(B) rows k map to B rows (no trans) or B columns (trans).
    const T* b_right = trans_b ? b + k_left : b + static_cast<size_t>(k_left) * ldb;
    std::thread helper([&] {
        gemm_raw(false, trans_b, m, n, k_left, T(1), a, lda, b, ldb, T(0), c_left, n);
    });
    gemm_raw(false, trans_b, m, n, k_right, T(1), a_right, lda, b_right, ldb, T(0), c_right, n);
    helper.join();
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<size_t>(i) * ldc;
        const T* l = c_left + static_cast<size_t>(i) * n;
        const T* r = c_right + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] += l[j] + r[j];
    }
}

} // namespace anoheal::nn
