// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/flops.hpp"

namespace srupp::flops {

namespace {
thread_local Scope* tl_active = nullptr;
}

Scope::Scope() : prev_(tl_active) { tl_active = this; }

Scope::~Scope() { tl_active = prev_; }

void add(u64 n) {
  if (tl_active != nullptr) tl_active->count_ += n;
}

}  // namespace srupp::flops
