// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace lapsekit::prompts {

// Versioned prompt texts for the three captioning stages. Requests embed the
// rendered prompt so annotation runs stay reproducible; bump kVersion on any
// wording change.

inline constexpr int kVersion = 1;

inline constexpr std::string_view kKeyframeStage =
    "You caption one frame taken from a longer video.\n"
    "Video title: {title}\n"
    "Video hashtags: {hashtags}\n"
    "First note the visible subject, its setting, and its current state; then answer "
    "with a single sentence describing exactly what this frame shows.\n"
    "Example answer: A tightly closed green bud stands on a thin stem in a clay pot.";

inline constexpr std::string_view kFuseStage =
    "You are given captions of keyframes from one video, in temporal order:\n"
    "{captions}\n"
    "Video title: {title}\n"
    "Video hashtags: {hashtags}\n"
    "Work through how the subject changes from the first keyframe to the last; then "
    "answer with one fluent caption that describes the whole video from start to end.\n"
    "Example answer: A green bud slowly unfolds its petals and opens into a full pink "
    "flower.";

inline constexpr std::string_view kJudgeStage =
    "A video is captioned as follows:\n"
    "{caption}\n"
    "A time-lapse video condenses a long real-world process (hours to months) into a "
    "short clip, showing a subject change state substantially. Consider whether the "
    "caption describes such a process; then answer strictly yes or no: is this video "
    "a time-lapse?";

}  // namespace lapsekit::prompts
