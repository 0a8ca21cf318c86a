#pragma once

#include <stdexcept>
#include <string>

namespace inscene {

// Bad input or configuration the caller can fix. The CLI maps this to exit 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A pipeline asked the registry for a provider that is not configured.
class RegistryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Channel arithmetic broke somewhere between conditioning and the backbone.
// This is a wiring bug, not a user error; it must never be swallowed.
class ChannelMismatchError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace inscene
