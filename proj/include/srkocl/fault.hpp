#pragma once

#include <string_view>

// Deliberate defects that the verification suite must detect. Test fixtures
// only; never enabled during ordinary runs.
namespace srkocl::fault {

enum class Fault { none, conv2d_backward_sign };

void inject(Fault f);
Fault active();
Fault parse(std::string_view name);

class ScopedFault {
 public:
  explicit ScopedFault(Fault f) : previous_(active()) { inject(f); }
  ~ScopedFault() { inject(previous_); }
  ScopedFault(const ScopedFault&) = delete;
  ScopedFault& operator=(const ScopedFault&) = delete;

 private:
  Fault previous_;
};

}  // namespace srkocl::fault
