#pragma once

#include <stdexcept>
#include <string>

namespace dvp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes (frame sizes, channel counts, clip lengths) do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A precondition on an argument or configuration value was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// File system or codec failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// A file was readable but its contents do not follow the expected layout.
class FormatError : public IoError {
public:
    using IoError::IoError;
};

/// Training produced a NaN or infinite loss.
class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(const std::string& what, int epoch, int frame)
        : Error(what), epoch_(epoch), frame_(frame) {}

    int epoch() const noexcept { return epoch_; }
    int frame() const noexcept { return frame_; }

private:
    int epoch_;
    int frame_;
};

/// E_pair normalisation is undefined when no pixel survives the mask.
class EmptyMask : public Error {
public:
    using Error::Error;
};

}  // namespace dvp
