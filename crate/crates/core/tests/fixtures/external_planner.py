#!/usr/bin/env python3
"""Minimal external subject: drive straight at the current waypoint.

Speaks the line-delimited JSON protocol: one `reset` per test answered
with `ready`, then one `command` per `plan` request. Angles in radians.
"""
import json
import math
import sys

robot = None

for line in sys.stdin:
    msg = json.loads(line)
    if msg["type"] == "reset":
        robot = msg["robot"]
        print(json.dumps({"type": "ready"}), flush=True)
        continue

    pose = msg["robot_pose"]
    wp = msg["current_waypoint"]
    dx, dy = wp["x"] - pose["x"], wp["y"] - pose["y"]
    c, s = math.cos(pose["yaw"]), math.sin(pose["yaw"])
    bx, by = c * dx + s * dy, -s * dx + c * dy
    dist = math.hypot(bx, by)
    speed = min(robot["nominal_speed"], dist / 0.5)
    vx, vy = (speed * bx / dist, speed * by / dist) if dist > 1e-9 else (0.0, 0.0)
    yaw_err = (wp["yaw"] - pose["yaw"] + math.pi) % (2 * math.pi) - math.pi
    wyaw = max(-robot["max_yaw_rate"], min(robot["max_yaw_rate"], yaw_err))
    print(json.dumps({"type": "command", "vx": vx, "vy": vy, "wyaw": wyaw}), flush=True)
