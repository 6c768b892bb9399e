# 核心系統初始化
