#include "sdd/blas.hpp"

#include <cblas.h>

#include <cstdlib>
#include <cstring>
#include <string>
#include <unistd.h>

namespace sdd {

void dgemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
           const double* a, int lda, const double* b, int ldb, double beta,
           double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
              ldb, beta, c, ldc);
}

namespace {

bool generic_kernel_selected() {
  const char* name = openblas_get_corename();
  return name != nullptr &&
         (std::strcmp(name, "Prescott") == 0 || std::strcmp(name, "generic") == 0);
}

}  // namespace

void init_blas_runtime(char** argv) {
  openblas_set_num_threads(1);
#if defined(__x86_64__) && defined(__GNUC__)
  if (argv == nullptr) return;
  if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;   // explicit choice wins
  if (std::getenv("SDD_BLAS_REEXEC") != nullptr) return;     // already retried once
  if (!__builtin_cpu_supports("avx512f")) return;
  if (!generic_kernel_selected()) return;
  setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 1);
  setenv("SDD_BLAS_REEXEC", "1", 1);
  execv("/proc/self/exe", argv);
  // exec failed: keep running on the slow kernel.
  unsetenv("OPENBLAS_CORETYPE");
#else
  (void)argv;
#endif
}

}  // namespace sdd
