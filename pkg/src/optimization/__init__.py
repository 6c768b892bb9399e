# 黎曼最佳化
