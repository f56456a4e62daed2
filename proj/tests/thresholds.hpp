#pragma once

// Scripted mir_nav agent, 3 obstacles. Development run: seeds 0..19, 100
// episodes each, success rate min 0.84, max 0.95, mean 0.883, sd 0.035.
// Threshold = mean - 3 sd (0.778), to two decimals.
inline constexpr double kMirThreeObstacleThreshold = 0.78;
inline constexpr double kMirNoObstacleThreshold = 0.9;
