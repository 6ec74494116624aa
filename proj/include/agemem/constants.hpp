#pragma once

namespace agemem {

// Runtime defaults. Config and tool schemas must agree with these values.
inline constexpr int kDefaultEmbeddingDim = 256;
inline constexpr int kDefaultContextBudget = 8192;   // T_max, tokens
inline constexpr int kDefaultResponseBudget = 2048;  // max completion tokens
inline constexpr int kDefaultRetrieveTopK = 3;
inline constexpr double kDefaultFilterThreshold = 0.6;
inline constexpr int kDefaultMaxRounds = 20;  // N_max per stage
inline constexpr int kDefaultGroupSize = 8;   // K rollouts per task
inline constexpr double kDefaultKlBeta = 0.1;
inline constexpr double kDefaultAdvantageEpsilon = 1e-8;

inline constexpr double kNoAnswerPenalty = -1.0;
inline constexpr double kRoundsPenalty = -1.0;
inline constexpr double kOverflowPenalty = -0.5;

}  // namespace agemem
