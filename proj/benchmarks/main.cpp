#include <benchmark/benchmark.h>

// libbenchmark_main.a on Ubuntu 22.04 is LTO bytecode from another GCC and does not link.
BENCHMARK_MAIN();
