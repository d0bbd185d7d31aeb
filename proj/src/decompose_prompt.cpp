#include "p2s/decompose.hpp"
#include "p2s/digest.hpp"

namespace p2s {

namespace {

// Version 1. Any edit changes the prompt digest and therefore every cache key.
constexpr std::string_view kPromptV1 =
    R"(You split a video search query into exactly two sub-queries that describe the
event in the order it happens on screen.

Rules:
1. Temporal order. Q_a describes the starting state or first step of the event.
   Q_b describes the ending state or final step. Q_a must happen before Q_b.
2. Self-contained. Each sub-query must make sense on its own. Replace every
   pronoun (he, she, it, they, him, her, them, his, its, their) with the noun
   it refers to.
3. No new content. Use only people, objects, places and actions that appear in
   the query. Do not add details, adjectives, emotions or explanations.
4. Exactly two. Never output more or fewer than two sub-queries.
5. Short declarative sentences. Describe what is visible, one sentence each.
6. Atomic queries. If the query contains a single indivisible action, put the
   setting or context (who is where, holding what) in Q_a and the action itself
   in Q_b.

Output format, with nothing before or after:
Q_a: <start-state sentence>
Q_b: <end-state sentence>

Example
Query: A woman opens the fridge and takes out a bottle of milk.
Q_a: A woman opens the fridge.
Q_b: A woman takes out a bottle of milk from the fridge.

Example
Query: A dog jumps.
Q_a: A dog is standing on the ground.
Q_b: A dog jumps into the air.
)";

} // namespace

std::string_view decompose_system_prompt() { return kPromptV1; }

const std::string& decompose_prompt_digest()
{
    static const std::string digest = sha256_hex(kPromptV1);
    return digest;
}

} // namespace p2s
