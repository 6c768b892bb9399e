# 初始化文件
