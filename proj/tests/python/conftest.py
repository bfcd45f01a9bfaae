import os
import sys

build = os.environ.get("PFTOPO_PYTHON_BUILD_DIR")
if build:
    sys.path.insert(0, build)
