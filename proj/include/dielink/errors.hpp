#pragma once

#include <stdexcept>
#include <string>

namespace dielink {

/// Base of every error raised by the library. Each subclass names one
/// failure the caller is expected to handle distinctly.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// imaging
class DecodeError : public Error {
public:
    using Error::Error;
};
class SegmentationFailure : public Error {
public:
    using Error::Error;
};

// registration: all four make a pair unalignable
class RegistrationError : public Error {
public:
    using Error::Error;
};
class TooFewKeypoints : public RegistrationError {
public:
    using RegistrationError::RegistrationError;
};
class NoMatches : public RegistrationError {
public:
    using RegistrationError::RegistrationError;
};
class DegenerateGeometry : public RegistrationError {
public:
    using RegistrationError::RegistrationError;
};
class ConsensusFailure : public RegistrationError {
public:
    using RegistrationError::RegistrationError;
};

// scoring
class EmptyOverlap : public Error {
public:
    using Error::Error;
};
class DatasetTooSmall : public Error {
public:
    using Error::Error;
};

}  // namespace dielink
