const squares = [1, 2, 3, 4].map((x) => x * x);
const total = squares.reduce((a, b) => a + b, 0);
console.log(squares.join(","), total);
