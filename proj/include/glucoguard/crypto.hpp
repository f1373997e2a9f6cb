#pragma once

#include "glucoguard/bytes.hpp"

#include <initializer_list>

namespace glucoguard {

/// SHA-256 over one contiguous buffer.
Digest sha256(ByteSpan data);

/// SHA-256 over the concatenation of several buffers, without copying them.
Digest sha256(std::initializer_list<ByteSpan> parts);

}  // namespace glucoguard
