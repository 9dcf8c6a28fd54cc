#include <atomic>
#include <cstdlib>
#include <string_view>

#include "ppmp/kernels/kernels.hpp"

namespace ppmp::kernels {

namespace {

const KernelTable* initial_selection() {
  if (const char* env = std::getenv("PPMP_SIMD"); env && std::string_view(env) == "scalar") {
    return &scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_selection()};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

Isa select(Isa isa) {
  const KernelTable* table = &scalar_table();
  if (isa == Isa::avx2) {
    if (const KernelTable* t = avx2_table()) table = t;
  }
  current().store(table, std::memory_order_release);
  return table->isa;
}

}  // namespace ppmp::kernels
