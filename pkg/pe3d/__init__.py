# 3D 위치 인코딩(PE) 핵심 패키지
