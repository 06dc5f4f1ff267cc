// Thin wrapper over the BLAS dgemm used by the tensor ops, plus runtime
// setup that pins single-threaded execution (bitwise determinism) and
// works around broken CPU detection inside virtual machines.
#pragma once

namespace sdd {

// C[m x n] (+)= A op B with row-major storage.
// trans_a/trans_b transpose the logical operand without moving data.
// beta = 0 overwrites C, beta = 1 accumulates.
void dgemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
           const double* a, int lda, const double* b, int ldb, double beta,
           double* c, int ldc);

// Call once at program start, before any other library entry point.
//
// Forces single-threaded BLAS so reductions have a fixed order. If the
// BLAS runtime fell back to its generic pre-SSE3 kernel while the CPU
// reports AVX-512F (a common cpuid failure under virtualization) and the
// caller did not set OPENBLAS_CORETYPE, re-execs the process once with a
// matching kernel selected; the env var is only read at library load time,
// which is why a re-exec is needed. argv may be null, in which case the
// re-exec step is skipped and only the thread count is pinned.
void init_blas_runtime(char** argv);

}  // namespace sdd
