#pragma once

#include "loadpatch/promptset.hpp"

#include <string>
#include <vector>

namespace loadpatch {

enum class RepairKind {
    padded,       // short completion right-padded with the last valid token
    truncated,    // long completion cut back to 96 tokens
    interpolated, // invalid/missing token inside the window filled from neighbors
    clamped,      // decoded value in (200, 242] clamped to 200
};

std::string repair_kind_name(RepairKind kind);

struct Repair {
    RepairKind kind;
    int position; // series index, or -1 for whole-sequence repairs
};

// Decoded, repaired, denormalized 16-point restored segment. Only the masked
// window is ever read from the completion; the known pre/post values stay
// authoritative everywhere else.
struct RestorationResult {
    DayRef day_ref;
    std::vector<int> restored_q;     // 16 values in [0, 200]
    std::vector<double> restored_kw; // dequantized pointwise
    std::vector<Repair> repairs;
    std::string raw_completion;
};

// Repair budget: token count within 96 +/- 4 and at most 25% invalid tokens;
// anything worse raises Error{restoration_failed} with diagnostics.
RestorationResult extract_restored(const std::string& completion, const MaskedDay& day,
                                   const PromptVariant& variant,
                                   const NormalizationParams& params);

} // namespace loadpatch
