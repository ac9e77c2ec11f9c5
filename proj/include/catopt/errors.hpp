#pragma once

#include <stdexcept>
#include <string>

namespace catopt {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normal end-of-run conditions, thrown so they unwind from arbitrarily deep
// search code to the run loop.
struct Termination : Error {
  using Error::Error;
};

struct BudgetExhausted : Termination {
  BudgetExhausted() : Termination("real-evaluation budget exhausted") {}
};

struct TimeLimitExceeded : Termination {
  TimeLimitExceeded() : Termination("wall-clock time limit exceeded") {}
};

struct ConfigError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct EmptyPopulation : Error {
  EmptyPopulation() : Error("population is empty") {}
};

struct MissingFitness : Error {
  MissingFitness() : Error("solutions have no comparable fitness values") {}
};

struct EmptyArchive : Error {
  EmptyArchive() : Error("fitness archive is empty") {}
};

struct TooFewSamples : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct BadBlockSize : Error {
  using Error::Error;
};

struct NoTrainingData : Error {
  NoTrainingData() : Error("no subset produced a trained model") {}
};

struct SplitMismatch : Error {
  using Error::Error;
};

struct EmptyInput : Error {
  using Error::Error;
};

}  // namespace catopt
