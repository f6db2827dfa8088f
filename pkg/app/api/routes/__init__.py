# API 라우트 패키지 