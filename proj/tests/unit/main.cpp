#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "sdd/blas.hpp"

int main(int argc, char** argv) {
  sdd::init_blas_runtime(argv);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
