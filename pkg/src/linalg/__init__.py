# 線性代數核心
