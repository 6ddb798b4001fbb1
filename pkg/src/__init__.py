# ztmesh package
