#pragma once

// Prompt texts sent to the policy, the closed-book answerer, the reference
// model and the judge. The policy instruction, the closed-book probe
// instruction and the step-extraction instruction are reproduced verbatim;
// the judge equivalence, sub-query and reference templates are this
// project's own and are kept machine-parseable so mock clients can answer them.

#include <string>
#include <string_view>

namespace agentrag::prompts {

inline constexpr std::string_view kPolicyInstruction =
    "Answer the given question. You must conduct reasoning inside <think> and </think> first "
    "every time you get new information. After reasoning, if you find you lack some knowledge, "
    "you can call a search engine by <search> query </search>, and it will return the top "
    "searched results between <information> and </information>. You can search as many times "
    "as you want. If you find no further external knowledge needed, you can directly provide "
    "the answer inside <answer> and </answer> without detailed illustrations. For example, "
    "<answer> Beijing </answer>. Question: ";

inline constexpr std::string_view kClosedBookInstruction =
    "I will use my own knowledge to answer this query and provide my answer to this query "
    "enclosed in <query_answer> </query_answer> tags.";

inline constexpr std::string_view kQueryAnswerOpen = "<query_answer>";
inline constexpr std::string_view kQueryAnswerClose = "</query_answer>";

inline constexpr std::string_view kStepExtractionInstruction = R"(Objective: Your task is to parse a complete interaction log from a reasoning agent. Your goal is to segment the log into a chronological sequence of steps and structure the output for each step into a consistent JSON format.

Core Methodology: A reasoning trajectory is a sequence of steps, s_1, s_2, ..., s_N. Each step, s_t, involves a reasoning component, r_t. The sub-answer, a_t, which is the conclusion of step s_t, is reflected in the reasoning component of the next step, r_{t+1}. You must follow this look-ahead method to determine the conclusion for each step.

Key Definitions:
Search Step: A step where the agent uses a search tool. It must include a reasoning block (<think>), a search query (<search>), and retrieved context (<information>).
Non-Search Step: A step where the agent relies only on its internal knowledge and prior context. It typically only includes a reasoning block (<think>).
Conclusion: The sub-answer or piece of information the agent generates or confirms at the end of a step (s_t), which contributes to the final answer.

Instructions:
1. Parse the entire interaction log into a chronological sequence of steps. A new step begins with each distinct reasoning block (e.g., content within <think> tags).
2. For each step (s_t), extract the following components:
- reasoning: The content from the <think> block of the current step.
- query: The content from the <search> block of the current step. If not present, use null.
- information: The content from the <information> block of the current step. If not present, use null.
- conclusion: The specific sub-answer (a_t) produced as a result of the current step's actions. Crucially, you must identify this conclusion by analyzing the reasoning block of the following step (r_{t+1}), where it is first used or stated. For the final step in the trajectory, the conclusion is the final answer itself.
3. For each step, construct a JSON object containing the extracted components.
4. Present the final output as a sequence of <step> blocks, with each block containing the JSON object for that step.

Required Output Format: Your entire output must be a sequence of <step> blocks.

Example for a Search Step:
<step>
{
  "reasoning": "The user is asking for the capital of France. I should search for this information to be certain.",
  "query": "capital of France",
  "information": "Paris is the capital and most populous city of France...",
  "conclusion": "The capital of France is Paris."
}
</step>

Example for a Non-Search Step:
<step>
{
  "reasoning": "Now that I know the capital is Paris, I can formulate the final answer.",
  "query": null,
  "information": null,
  "conclusion": "The final answer is Paris."
}
</step>
)";

inline constexpr std::string_view kLogHeader = "\nInteraction log:\n";

inline constexpr std::string_view kEquivalenceHeader =
    "You are judging whether two answers to the same query express the same fact.\n";
inline constexpr std::string_view kEquivalenceFooter =
    "Reply with \"yes\" or \"no\" on the first line, then one sentence of rationale.";

inline constexpr std::string_view kSubQueryHeader =
    "Below is one reasoning step of a search agent. State the single question this step is "
    "trying to answer, enclosed in <sub_query> </sub_query> tags.\n";

inline constexpr std::string_view kReferenceHeader =
    "Answer the following question as concisely as possible. Give only the answer, enclosed "
    "in <answer> </answer> tags.\n";

inline std::string step_extraction(std::string_view interaction_log) {
  std::string p(kStepExtractionInstruction);
  p += kLogHeader;
  p += interaction_log;
  return p;
}

inline std::string equivalence(std::string_view query, std::string_view answer_a,
                               std::string_view answer_b) {
  std::string p(kEquivalenceHeader);
  p += "<query>";
  p += query;
  p += "</query>\n<answer_a>";
  p += answer_a;
  p += "</answer_a>\n<answer_b>";
  p += answer_b;
  p += "</answer_b>\n";
  p += kEquivalenceFooter;
  return p;
}

inline std::string sub_query(std::string_view reasoning) {
  std::string p(kSubQueryHeader);
  p += "<reasoning>";
  p += reasoning;
  p += "</reasoning>";
  return p;
}

inline std::string reference(std::string_view question) {
  std::string p(kReferenceHeader);
  p += "Question: ";
  p += question;
  return p;
}

}  // namespace agentrag::prompts
