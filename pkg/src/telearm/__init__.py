"""telearm: teleoperation stack for a 5-DoF hobby arm.

Quaternion/DH kinematics, a QP-based constrained task-space controller,
a simulated servo robot, master-device calibration and mapping, a serial
device protocol, and a leader-follower network layer with relay gateway,
all behind one `telearm` CLI and a WebSocket cockpit bridge.
"""

from .kinematics import DHChain, DHRow, Pose, fkm, umirobot_chain
from .mathcore import Quaternion, UnitQuaternion

__version__ = "0.1.0"

__all__ = [
    "DHChain", "DHRow", "Pose", "Quaternion", "UnitQuaternion",
    "fkm", "umirobot_chain", "__version__",
]
