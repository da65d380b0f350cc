#include "rmesn/error.hpp"

namespace rmesn {

SampleTooShort::SampleTooShort(std::size_t sample, std::size_t length)
    : InvalidInput("sample " + std::to_string(sample) + " has length " +
                   std::to_string(length) +
                   ", at least 2 steps are needed to fit a predictor"),
      sample_(sample) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

DivergenceError::DivergenceError(std::size_t epoch)
    : NumericalError("training diverged (non-finite loss) at epoch " +
                     std::to_string(epoch)),
      epoch_(epoch) {}

}  // namespace rmesn
