"""Drive the review API end to end against a live server.

Starts uvicorn on a local port, then plays one reviewer session with
plain urllib: read the project, nudge a box, watch the revision
counter advance, and see a stale write get rejected with 409.
"""

import json
import math
import threading
import time
import urllib.error
import urllib.request

import numpy as np
import uvicorn

from boxlabel import (
    CameraModel,
    Frame,
    FrameSet,
    InstanceSet,
    RigidTransform,
    VirtualBox,
)
from boxlabel.server import create_app

PORT = 8799
BASE = f"http://127.0.0.1:{PORT}"

CAM = CameraModel(fx=600.0, fy=600.0, cx=320.0, cy=240.0, width=640, height=480)


def call(method, path, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(BASE + path, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


frames = []
for i in range(12):
    ang = -math.pi + 2 * math.pi * (i + 0.5) / 12  # one camera per azimuth bin
    eye = np.array([3 * math.cos(ang), 3 * math.sin(ang), 1.0])
    z = -eye / np.linalg.norm(eye)
    x = np.cross([0.0, 0.0, 1.0], z)
    x = x / np.linalg.norm(x)
    pose = RigidTransform(np.column_stack([x, np.cross(z, x), z]), eye)
    frames.append(Frame(id=i, image_path=f"{i}.png", world_T_cam=pose, camera=CAM))

instances = InstanceSet(
    class_table={0: "bin"},
    instances=[VirtualBox(id=0, world_T_obj=RigidTransform.identity(),
                          size=np.array([0.4, 0.4, 0.3]), class_id=0)],
)

app = create_app(FrameSet(camera=CAM, frames=frames), instances)
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=PORT,
                                       log_level="error"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.02)

status, fr = call("GET", "/api/frames")
status2, inst = call("GET", "/api/instances")
print(f"GET /api/frames    -> {status}: {len(fr['frames'])} frames, "
      f"revision {fr['revision']}")
print(f"GET /api/instances -> {status2}: {len(inst['instances'])} instances, "
      f"classes {inst['classes']}")

rev = inst["revision"]
status, body = call("PATCH", "/api/instances/0", {
    "base_revision": rev,
    "size": [0.45, 0.4, 0.3],
})
print(f"PATCH size         -> {status}: revision now {body['revision']}")

# a second reviewer still holding the old revision gets told to reload
status, body = call("PATCH", "/api/instances/0", {
    "base_revision": rev,
    "size": [0.5, 0.5, 0.5],
})
print(f"stale PATCH        -> {status}: {body['error']} "
      f"(server is at {body['revision']})")

status, cov = call("GET", "/api/coverage/0?bins=12x1")
print(f"GET coverage       -> {status}: azimuth counts {cov['counts'][0]}")

status, overlay = call("GET", "/api/frames/3/overlay")
for e in overlay["instances"]:
    b = e["bbox"]
    print(f"frame 3 overlay    -> instance {e['instance_id']} at "
          f"({b['cx']:.1f},{b['cy']:.1f}) {b['w']:.1f}x{b['h']:.1f} px, "
          f"{len(e['polygon'])} outline points")

server.should_exit = True
thread.join(timeout=5)
print("server stopped")
