#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "vra/digest.hpp"

namespace vra {

enum class AgentRole { initializer, critic, scorer };

inline std::string_view to_string(AgentRole role) {
    switch (role) {
        case AgentRole::initializer: return "initializer";
        case AgentRole::critic: return "critic";
        case AgentRole::scorer: return "scorer";
    }
    return "unknown";
}

/// A fully substituted agent prompt. Prompts are byte-stable for identical
/// inputs; their text participates in the gateway cache key.
struct PromptText {
    AgentRole role;
    std::string text;
    int m = 0;  // salesman count (initializer / critic)
    int k = 0;  // image count (scorer)
};

// The three prompt templates are kept here as versioned resources; the run
// manifest records prompt_template_version plus a hash of each generated
// prompt family so revisions stay diffable.
inline constexpr std::string_view kPromptTemplateVersion = "route-prompts-v1";

namespace detail {

inline std::string route_prompt_body(int m, bool critic) {
    std::string p =
        "Inspect the provided image and find routes for " + std::to_string(m) +
        " salesmen starting from the depot, which is marked with a black square. Ensure that:\n"
        "- All nodes are visited once by only one salesman.\n"
        "- Each salesman starts from the depot and returns to the depot.\n"
        "- Minimize intersections between the different routes and within the same route.\n"
        "- Each route should cover a cluster of points.\n"
        "- The routes should be as short as possible.\n";
    if (critic) {
        p +=
            "- Aim to improve upon the current routes shown in the image by further reducing "
            "intersections and optimizing the travel distance.\n";
    }
    p += "\nOutput the sequences for the routes in the following format:\n<<start>>\n";
    for (int i = 1; i <= m; ++i) {
        p += "Salesman" + std::to_string(i) + ": Depot-Node1-Node2-...-Depot\n";
    }
    p +=
        "<<end>>\n\nDo not include any additional explanations or text. Use only the output "
        "format specified above.";
    return p;
}

}  // namespace detail

inline PromptText initializer_prompt(int m) {
    if (m < 1) throw std::invalid_argument("initializer_prompt: m must be >= 1");
    return PromptText{AgentRole::initializer, detail::route_prompt_body(m, false), m, 0};
}

inline PromptText critic_prompt(int m) {
    if (m < 1) throw std::invalid_argument("critic_prompt: m must be >= 1");
    return PromptText{AgentRole::critic, detail::route_prompt_body(m, true), m, 0};
}

inline PromptText scorer_prompt(int k) {
    if (k < 2) throw std::invalid_argument("scorer_prompt: k must be >= 2");
    std::string score_list;
    if (k <= 3) {
        for (int i = 1; i <= k; ++i) {
            score_list += "image" + std::to_string(i) + ": score";
            if (i != k) score_list += ", ";
        }
    } else {
        score_list = "image1: score, image2: score, ..., image" + std::to_string(k) + ": score";
    }
    std::string p =
        "Examine the provided images, each representing different solutions for the same TSP. "
        "Evaluate each image against the following criteria to select the best solution:\n"
        "1. Complete Node Coverage: Ensure all nodes are visited exactly once. Prefer routes "
        "that miss the fewest nodes.\n"
        "2. Minimized Crossing Lines: Fewer crossing lines generally indicate a shorter total "
        "distance.\n"
        "3. Route Clarity: The path should be easy to follow visually, with minimal overlapping "
        "lines.\n"
        "4. Starting and Ending Point: The route should start and end at node 0.\n\n"
        "Rank each image based on these criteria and output the score for each image. The image "
        "IDs range from 1 to " +
        std::to_string(k) +
        ", corresponding to the first to the last image. Output only the image ID and its score, "
        "formatted as follows: <<" +
        score_list +
        ">>. Then, select the best image and output its ID formatted as follows: "
        "<<the best route: ID>>. A higher score indicates a better solution. Please adhere "
        "strictly to this format without additional commentary.";
    return PromptText{AgentRole::scorer, std::move(p), 0, k};
}

/// Stable fingerprint of the template family, recorded in the run manifest.
inline std::string prompt_templates_hash() {
    std::string all = std::string(kPromptTemplateVersion) + "\n" + initializer_prompt(1).text +
                      "\n" + critic_prompt(1).text + "\n" + scorer_prompt(7).text;
    return sha256_hex(all);
}

}  // namespace vra
