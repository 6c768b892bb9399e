# 系統模組初始化
